"""
Embedding reconstruction loss between the scaled PACE embedding and the
reference codec embedding.
"""
from pace.exceptions import DimensionError
from pace.tensor import Tensor
from pace.types import CodecEmbedding


def recon_embedding_loss(e_hat: CodecEmbedding, e_ref: CodecEmbedding) -> Tensor:
    """Mean squared error over all entries; the reference side is a constant."""
    if e_hat.values.shape != e_ref.values.shape:
        raise DimensionError(
            f"embedding shapes differ: {e_hat.values.shape} vs {e_ref.values.shape}"
        )
    return ((e_hat.values - e_ref.values.detach()) ** 2).mean()
