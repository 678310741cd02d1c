"""
Weighted generator objective.
"""
import math
from dataclasses import dataclass, fields
from typing import Dict, Optional

from pace.codec.rvq import QuantizerOutput
from pace.config import LossWeights, settings
from pace.exceptions import ConfigurationError
from pace.tensor import Tensor


@dataclass
class LossParts:
    """Generator loss components; None means not computed in this stage."""

    mi: Optional[Tensor] = None
    recon_e: Optional[Tensor] = None
    adv: Optional[Tensor] = None
    feat: Optional[Tensor] = None
    rec: Optional[Tensor] = None

    def values(self) -> Dict[str, float]:
        return {
            f.name: (getattr(self, f.name).item() if getattr(self, f.name) is not None else 0.0)
            for f in fields(self)
        }


def commitment_loss(quant: QuantizerOutput, weight: Optional[float] = None) -> Tensor:
    weight = settings.rvq.commitment_weight if weight is None else weight
    return quant.commitment * weight


def check_weights(w: LossWeights) -> None:
    for name, value in w.model_dump().items():
        if not math.isfinite(value) or value < 0:
            raise ConfigurationError(f"loss weight {name} must be finite and >= 0, got {value}")


def total_generator_loss(parts: LossParts, w: Optional[LossWeights] = None) -> Tensor:
    """lambda_mi L_mi + lambda_recon_e L_recon_e + lambda_adv L_adv + lambda_feat L_feat + lambda_rec L_rec"""
    w = w or settings.losses
    check_weights(w)
    total: Tensor = Tensor(0.0)
    for f in fields(parts):
        part = getattr(parts, f.name)
        weight = getattr(w, f"lambda_{f.name}")
        if part is None or weight == 0.0:
            continue
        total = total + part * weight
    return total
