"""
Per-step training log written as CSV.
"""
import csv
from pathlib import Path
from typing import Dict, List, Sequence, Union

TRAINING_COLUMNS = (
    "step",
    "l_mi",
    "l_recon_e",
    "l_adv",
    "l_feat",
    "l_rec",
    "l_disc",
    "total",
    "q_nll_f0",
    "q_nll_uv",
)


class CsvLog:
    """Appends one row per call; missing columns are written as 0."""

    def __init__(self, path: Union[str, Path], columns: Sequence[str] = TRAINING_COLUMNS):
        self.path = Path(path)
        self.columns = list(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="") as fh:
            csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n").writeheader()

    def append(self, row: Dict[str, float]) -> None:
        full = {name: row.get(name, 0) for name in self.columns}
        with self.path.open("a", newline="") as fh:
            csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n").writerow(
                {k: _fmt(v) for k, v in full.items()}
            )


def _fmt(value) -> str:
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.6g}"


def read_rows(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
