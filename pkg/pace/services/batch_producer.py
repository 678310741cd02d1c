"""
Background batch assembly feeding the trainer through a bounded queue.
"""
import queue
import threading
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from pace.config import ProsodyConfig, settings
from pace.logger import get_logger
from pace.prosody import ProsodyFeatures
from pace.types import AudioClip

logger = get_logger(__name__)

_DONE = object()


@dataclass
class Batch:
    step: int
    clips: List[AudioClip]
    features: List[Optional[ProsodyFeatures]]


class BatchProducer:
    """
    Draws `steps` batches of random clips from a producer thread. The draw order
    depends only on `seed`, so a run is reproducible whatever the thread timing.
    """

    def __init__(
        self,
        clips: Sequence[AudioClip],
        batch_size: int,
        steps: int,
        seed: int,
        queue_size: Optional[int] = None,
        with_features: bool = True,
        prosody: Optional[ProsodyConfig] = None,
    ):
        self.clips = list(clips)
        self.batch_size = batch_size
        self.steps = steps
        self.seed = seed
        self.with_features = with_features
        self.prosody = prosody or settings.prosody
        self._queue: "queue.Queue" = queue.Queue(maxsize=queue_size or settings.data.queue_size)
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._features: Dict[int, ProsodyFeatures] = {}

    def __enter__(self) -> "BatchProducer":
        self._thread = threading.Thread(target=self._run, name="batch-producer", daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._stop.set()
        while self._thread is not None and self._thread.is_alive():
            try:
                self._queue.get(timeout=0.05)
            except queue.Empty:
                pass
        self._thread = None

    def __iter__(self) -> Iterator[Batch]:
        while True:
            item = self._queue.get()
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _feature(self, index: int) -> ProsodyFeatures:
        if index not in self._features:
            self._features[index] = ProsodyFeatures.from_clip(self.clips[index], self.prosody)
        return self._features[index]

    def _run(self) -> None:
        rng = np.random.default_rng(self.seed)
        try:
            for step in range(self.steps):
                picks = rng.integers(len(self.clips), size=self.batch_size)
                batch = Batch(
                    step=step,
                    clips=[self.clips[i] for i in picks],
                    features=[self._feature(int(i)) if self.with_features else None for i in picks],
                )
                if not self._put(batch):
                    return
            self._put(_DONE)
        except Exception as e:
            logger.error("Batch producer failed", error=str(e))
            self._put(e)
