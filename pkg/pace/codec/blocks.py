"""
Convolution blocks shared by the encoders and the decoder.
"""
import numpy as np

from pace.tensor import Conv1d, ConvTranspose1d, Module, Tensor


class ResidualUnit(Module):
    """x + conv1x1(elu(conv3(elu(x))))"""

    def __init__(self, rng: np.random.Generator, channels: int):
        super().__init__()
        self.conv = Conv1d(rng, channels, channels, 3)
        self.project = Conv1d(rng, channels, channels, 1)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.project(self.conv(x.elu()).elu())


class EncoderBlock(Module):
    """Residual unit then a strided convolution (kernel 2 * stride) dividing length by `stride`."""

    def __init__(self, rng: np.random.Generator, channels_in: int, channels_out: int, stride: int):
        super().__init__()
        self.stride = stride
        self.residual = ResidualUnit(rng, channels_in)
        self.down = Conv1d(rng, channels_in, channels_out, 2 * stride, stride=stride)

    def forward(self, x: Tensor) -> Tensor:
        return self.down(self.residual(x).elu())


class DecoderBlock(Module):
    """Transposed convolution multiplying length by `stride`, then a residual unit."""

    def __init__(self, rng: np.random.Generator, channels_in: int, channels_out: int, stride: int):
        super().__init__()
        self.stride = stride
        self.up = ConvTranspose1d(rng, channels_in, channels_out, 2 * stride, stride)
        self.residual = ResidualUnit(rng, channels_out)

    def forward(self, x: Tensor) -> Tensor:
        return self.residual(self.up(x.elu()))
