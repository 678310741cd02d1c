"""
Service layer for checkpoints: the PACK container on disk and the run registry
that records which stage produced which file.

PACK layout (little endian):
    magic "PACK" | version u32 | stage u32 | header length u32 | JSON header | blobs
The JSON header lists every blob as name, dtype, shape, offset and byte count,
followed by the RNG state, loss history and free-form metadata.
"""
import json
import struct
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from sqlalchemy import select
from sqlalchemy.orm import Session

from pace.database.models import Checkpoint, RunEvent, RunStatus, TrainingRun
from pace.exceptions import CheckpointFormatError, DependencyError
from pace.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"PACK"
VERSION = 1
_HEADER = struct.Struct("<4sIII")

REFERENCE_VARIANT = "reference"
STAGE_NAMES = {0: "reference codec", 1: "stage 1", 2: "stage 2", 3: "stage 3"}


@dataclass
class CheckpointData:
    stage: int
    variant: str
    steps: int
    tensors: Dict[str, np.ndarray]
    rng_state: dict = field(default_factory=dict)
    loss_history: List[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def section(self, prefix: str) -> Dict[str, np.ndarray]:
        """Entries under `prefix.`, with the prefix stripped."""
        head = f"{prefix}."
        return {k[len(head):]: v for k, v in self.tensors.items() if k.startswith(head)}


def write_pack(path: Union[str, Path], data: CheckpointData) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blobs, entries, offset = [], [], 0
    for name in sorted(data.tensors):
        array = np.ascontiguousarray(data.tensors[name])
        raw = array.tobytes()
        entries.append(
            {"name": name, "dtype": array.dtype.str, "shape": list(array.shape),
             "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps(
        {
            "variant": data.variant,
            "steps": data.steps,
            "blobs": entries,
            "rng_state": data.rng_state,
            "loss_history": data.loss_history,
            "meta": data.meta,
        },
        sort_keys=True,
    ).encode()
    # Prior checkpoint stays intact until the rename.
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.stage, len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)
    tmp.replace(path)
    return path


def read_pack(path: Union[str, Path]) -> CheckpointData:
    path = Path(path)
    if not path.is_file():
        raise DependencyError(f"checkpoint {path} does not exist")
    payload = path.read_bytes()
    if len(payload) < _HEADER.size:
        raise CheckpointFormatError(f"{path}: truncated header")
    magic, version, stage, size = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    start = _HEADER.size + size
    try:
        header = json.loads(payload[_HEADER.size:start])
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path}: unreadable header ({e})") from e
    body = payload[start:]
    tensors = {}
    for entry in header["blobs"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(body):
            raise CheckpointFormatError(f"{path}: blob {entry['name']} is truncated")
        tensors[entry["name"]] = (
            np.frombuffer(body[entry["offset"]:end], dtype=np.dtype(entry["dtype"]))
            .reshape(entry["shape"])
            .copy()
        )
    return CheckpointData(
        stage=stage,
        variant=header["variant"],
        steps=header["steps"],
        tensors=tensors,
        rng_state=header["rng_state"],
        loss_history=header["loss_history"],
        meta=header["meta"],
    )


def prefixed(prefix: str, state: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {f"{prefix}.{k}": v for k, v in state.items()}


def checkpoint_path(output_dir: Path, variant: str, stage: int) -> Path:
    if stage == 0:
        return Path(output_dir) / "checkpoints" / "reference.pack"
    return Path(output_dir) / "checkpoints" / f"{variant}_stage{stage}.pack"


def generate_run_id() -> str:
    return uuid.uuid4().hex


class RegistryService:
    """Service class for run and checkpoint records."""

    def __init__(self, session: Session):
        self.session = session

    def start_run(self, command: str, seed: int, variant: Optional[str] = None,
                  run_id: Optional[str] = None) -> TrainingRun:
        run = TrainingRun(id=run_id or generate_run_id(), command=command, variant=variant, seed=seed)
        self.session.add(run)
        self.session.flush()
        self.add_event(run.id, "STARTED", command)
        logger.info("Run started", run_id=run.id, command=command, variant=variant)
        return run

    def finish_run(self, run_id: str, status: RunStatus, details: Optional[str] = None) -> None:
        run = self.session.get(TrainingRun, run_id)
        if run is None:
            logger.warning("Finishing unknown run", run_id=run_id)
            return
        run.status = status.value
        run.finished_at = datetime.now()
        self.add_event(run_id, status.value, details)

    def add_event(self, run_id: str, action: str, details: Optional[str] = None) -> None:
        self.session.add(RunEvent(run_id=run_id, action=action, details=details))

    def record_checkpoint(self, path: Path, data: CheckpointData, fingerprint: str,
                          run_id: Optional[str] = None) -> Checkpoint:
        record = Checkpoint(
            run_id=run_id,
            variant=data.variant,
            stage=data.stage,
            steps=data.steps,
            path=str(path),
            fingerprint=fingerprint,
        )
        self.session.add(record)
        if run_id is not None:
            self.add_event(run_id, "CHECKPOINT", f"{data.variant} stage {data.stage} -> {path}")
        logger.info("Checkpoint recorded", variant=data.variant, stage=data.stage, path=str(path))
        return record

    def latest_checkpoint(self, variant: str, stage: int) -> Optional[Checkpoint]:
        result = self.session.execute(
            select(Checkpoint)
            .where(Checkpoint.variant == variant, Checkpoint.stage == stage)
            .order_by(Checkpoint.id.desc())
            .limit(1)
        )
        return result.scalar_one_or_none()

    def require_checkpoint(self, variant: str, stage: int) -> CheckpointData:
        """Load the newest checkpoint of `variant` at `stage`, or fail naming the stage."""
        record = self.latest_checkpoint(variant, stage)
        if record is None or not Path(record.path).is_file():
            label = STAGE_NAMES[stage]
            what = label if stage == 0 else f"{label} checkpoint for variant {variant}"
            raise DependencyError(f"missing {what}; train {label} first", stage=stage)
        return read_pack(record.path)

    def runs(self, command: Optional[str] = None) -> List[TrainingRun]:
        query = select(TrainingRun).order_by(TrainingRun.started_at)
        if command is not None:
            query = query.where(TrainingRun.command == command)
        return list(self.session.execute(query).scalars())
