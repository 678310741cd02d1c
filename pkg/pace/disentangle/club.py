"""
Contrastive log-ratio upper bound on the mutual information between frame
embeddings and prosody embeddings.

q(y|x) is a diagonal Gaussian whose mean and log-variance come from two small
perceptrons. The negative term averages log q(y_j|x_i) over all pairs in the
batch; because q is Gaussian the all-pairs average reduces to first and second
moments of y, so the bound costs O(N * D) instead of O(N^2 * D).
"""
import math
from typing import Literal, Optional, Tuple

import numpy as np

from pace.config import DisentangleConfig, settings
from pace.exceptions import ContractError, DimensionError
from pace.logger import get_logger
from pace.prosody import ProsodyEmbeddings
from pace.tensor import Adam, Linear, Module, Tensor, backward, concat

logger = get_logger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


class Perceptron(Module):
    def __init__(self, rng: np.random.Generator, dim_in: int, hidden: int, dim_out: int):
        super().__init__()
        self.inner = Linear(rng, dim_in, hidden)
        self.outer = Linear(rng, hidden, dim_out)

    def forward(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x).relu())


class ClubEstimator(Module):
    """Variational network q(prosody | frame embedding) for one prosody target."""

    def __init__(
        self,
        rng: np.random.Generator,
        dim: int,
        target: Literal["f0", "uv"],
        config: Optional[DisentangleConfig] = None,
        dim_out: Optional[int] = None,
    ):
        super().__init__()
        config = config or settings.disentangle
        self.target = target
        self.clamp = config.logvar_clamp
        dim_out = dim_out or dim
        self.mean_net = Perceptron(rng, dim, config.hidden, dim_out)
        self.logvar_net = Perceptron(rng, dim, config.hidden, dim_out)
        self._optimizer: Optional[Adam] = None

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        """(mu, logvar), each (N, D)."""
        return self.mean_net(x), self.logvar_net(x).clamp(-self.clamp, self.clamp)

    def log_likelihood(self, x: Tensor, y: Tensor) -> Tensor:
        """log q(y_i | x_i) per row, shape (N,)."""
        mu, logvar = self(x)
        return ((y - mu) ** 2 * (-logvar).exp() + logvar + LOG_2PI).sum(axis=1) * -0.5

    def optimizer(self, lr: float) -> Adam:
        if self._optimizer is None or self._optimizer.lr != lr:
            self._optimizer = Adam(self.parameters(), lr=lr)
        return self._optimizer


def _check_batch(x: Tensor, y: Tensor) -> None:
    if x.ndim != 2 or y.ndim != 2:
        raise DimensionError(f"batches must be (N, D), got {x.shape} and {y.shape}", axis="rank")
    if x.shape[0] != y.shape[0]:
        raise DimensionError(f"batches are not aligned: {x.shape[0]} vs {y.shape[0]} rows", axis=0)


def club_bound(e_f_batch: Tensor, prosody_batch: Tensor, est: ClubEstimator) -> Tensor:
    """
    (1/N) sum_i [log q(y_i|x_i) - (1/N) sum_j log q(y_j|x_i)].

    Differentiable with respect to `e_f_batch` only; estimator parameters and the
    prosody rows are constants here.
    """
    _check_batch(e_f_batch, prosody_batch)
    if e_f_batch.shape[0] < 2:
        raise ContractError("the contrastive term needs at least two pairs")
    y = prosody_batch.detach()
    first = y.data.mean(axis=0)
    second = (y.data ** 2).mean(axis=0)
    with est.frozen():
        mu, logvar = est(e_f_batch)
        precision = (-logvar).exp()
        paired = (y - mu) ** 2
        marginal = mu * mu - mu * (2.0 * first) + second
        gap = ((paired - marginal) * precision).sum(axis=1)
    return gap.mean() * -0.5


def fit_q_step(
    e_f_batch: Tensor,
    prosody_batch: Tensor,
    est: ClubEstimator,
    lr: Optional[float] = None,
) -> float:
    """
    One Adam step maximizing mean log q(y_i|x_i); returns the negative
    log-likelihood measured before the step. Inputs are treated as constants.
    """
    _check_batch(e_f_batch, prosody_batch)
    lr = settings.disentangle.lr if lr is None else lr
    opt = est.optimizer(lr)
    opt.zero_grad()
    nll = -est.log_likelihood(e_f_batch.detach(), prosody_batch.detach()).mean()
    backward(nll)
    opt.step()
    return nll.item()


def mi_loss(
    e_f_batch: Tensor,
    pros: ProsodyEmbeddings,
    f0_est: ClubEstimator,
    uv_est: ClubEstimator,
) -> Tensor:
    """L_MI = bound(e_f, e_f0) + bound(e_f, e_uv)."""
    return club_bound(e_f_batch, pros.e_f0, f0_est) + club_bound(e_f_batch, pros.e_uv, uv_est)


def sample_frames(rng: np.random.Generator, frames: int, count: int) -> np.ndarray:
    """Sorted frame indices drawn without replacement, at most `frames` of them."""
    count = min(count, frames)
    return np.sort(rng.choice(frames, size=count, replace=False))


def frame_batch(
    rng: np.random.Generator,
    frame_values: list,
    prosody: list,
    per_utterance: int,
) -> Tuple[Tensor, ProsodyEmbeddings]:
    """
    Flatten (utterance, frame) pairs into aligned MI batches; x_i and y_i always
    come from the same frame of the same utterance.
    """
    xs, f0s, uvs = [], [], []
    for values, pros in zip(frame_values, prosody):
        idx = sample_frames(rng, values.shape[0], per_utterance)
        xs.append(values[idx])
        f0s.append(pros.e_f0[idx])
        uvs.append(pros.e_uv[idx])
    return concat(xs, axis=0), ProsodyEmbeddings(concat(f0s, axis=0), concat(uvs, axis=0))
