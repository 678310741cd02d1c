"""
Differentiable operations on numpy arrays.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pace.tensor.core import Function


# --- elementwise arithmetic ---


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return self.unbroadcast(grad, a.shape), self.unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        a, b = self.inputs
        return self.unbroadcast(grad, a.shape), self.unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return (
            self.unbroadcast(grad * b.data, a.shape),
            self.unbroadcast(grad * a.data, b.shape),
        )


class Div(Function):
    def forward(self, a, b):
        return a / b

    def backward(self, grad):
        a, b = self.inputs
        return (
            self.unbroadcast(grad / b.data, a.shape),
            self.unbroadcast(-grad * a.data / (b.data * b.data), b.shape),
        )


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Pow(Function):
    def forward(self, a, *, exponent: float):
        self.exponent = exponent
        return a ** exponent

    def backward(self, grad):
        (a,) = self.inputs
        return (grad * self.exponent * a.data ** (self.exponent - 1.0),)


class Exp(Function):
    def forward(self, a):
        self.out = np.exp(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, a):
        return np.log(a)

    def backward(self, grad):
        return (grad / self.inputs[0].data,)


class Abs(Function):
    def forward(self, a):
        return np.abs(a)

    def backward(self, grad):
        return (grad * np.sign(self.inputs[0].data),)


class SafeSqrt(Function):
    """Square root whose gradient is 0 (not infinite) where the output is 0."""

    def forward(self, a):
        self.out = np.sqrt(a)
        return self.out

    def backward(self, grad):
        positive = self.out > 0
        safe = np.where(positive, self.out, 1.0)
        return (np.where(positive, grad / (2.0 * safe), 0.0),)


class Elu(Function):
    def forward(self, a, *, alpha: float = 1.0):
        self.alpha = alpha
        self.out = np.where(a > 0, a, alpha * np.expm1(np.minimum(a, 0.0)))
        return self.out

    def backward(self, grad):
        a = self.inputs[0].data
        return (grad * np.where(a > 0, 1.0, self.out + self.alpha),)


class LeakyRelu(Function):
    def forward(self, a, *, slope: float = 0.0):
        self.slope = slope
        return np.where(a > 0, a, slope * a)

    def backward(self, grad):
        a = self.inputs[0].data
        return (grad * np.where(a > 0, 1.0, self.slope),)


class Clamp(Function):
    def forward(self, a, *, low: float, high: float):
        self.mask = (a >= low) & (a <= high)
        return np.clip(a, low, high)

    def backward(self, grad):
        return (grad * self.mask,)


# --- shape and reductions ---


class Sum(Function):
    def forward(self, a, *, axis=None, keepdims: bool = False):
        self.axis, self.keepdims = axis, keepdims
        return np.sum(a, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        shape = self.inputs[0].shape
        if self.axis is not None and not self.keepdims:
            axes = (self.axis,) if isinstance(self.axis, int) else self.axis
            grad = np.expand_dims(grad, tuple(a % len(shape) for a in axes))
        return (np.broadcast_to(grad, shape).copy(),)


class Reshape(Function):
    def forward(self, a, *, shape):
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.inputs[0].shape),)


class Transpose(Function):
    def forward(self, a, *, axes=None):
        self.axes = tuple(axes) if axes else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, a, *, index):
        self.index = index
        return a[index]

    def backward(self, grad):
        out = np.zeros_like(self.inputs[0].data)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays, axis: int = 0):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, splits, axis=self.axis))


class MatMul(Function):
    def forward(self, a, b):
        return a @ b

    def backward(self, grad):
        a, b = self.inputs
        ga = grad @ np.swapaxes(b.data, -1, -2) if b.ndim > 1 else np.multiply.outer(grad, b.data)
        gb = np.swapaxes(a.data, -1, -2) @ grad if a.ndim > 1 else np.multiply.outer(a.data, grad)
        return self.unbroadcast(ga, a.shape), self.unbroadcast(gb, b.shape)


class EmbeddingLookup(Function):
    def forward(self, table, *, ids: np.ndarray):
        self.ids = ids
        return table[ids]

    def backward(self, grad):
        out = np.zeros_like(self.inputs[0].data)
        np.add.at(out, self.ids, grad)
        return (out,)


# --- convolutions ---


def _windows_1d(x: np.ndarray, kernel: int, stride: int, count: int) -> np.ndarray:
    """(C, T) -> (C*kernel, count) columns of strided windows."""
    channels = x.shape[0]
    view = sliding_window_view(x, kernel, axis=1)[:, ::stride][:, :count]
    return view.transpose(0, 2, 1).reshape(channels * kernel, count)


def _overlap_add_1d(cols: np.ndarray, channels: int, kernel: int, stride: int, length: int) -> np.ndarray:
    """Adjoint of `_windows_1d`: scatter-add (C*kernel, count) columns into (C, length)."""
    count = cols.shape[1]
    cols = cols.reshape(channels, kernel, count)
    out = np.zeros((channels, length), dtype=cols.dtype)
    span = stride * (count - 1) + 1
    for k in range(kernel):
        out[:, k:k + span:stride] += cols[:, k, :]
    return out


class Conv1d(Function):
    """Cross-correlation of (C_in, T) with weights (C_out, C_in, K)."""

    def forward(self, x, w, b=None, *, stride: int = 1, padding: int = 0):
        c_in, length = x.shape
        c_out, _, kernel = w.shape
        self.stride, self.padding = stride, padding
        self.t_out = (length + 2 * padding - kernel) // stride + 1
        xp = np.pad(x, ((0, 0), (padding, padding))) if padding else x
        self.cols = _windows_1d(xp, kernel, stride, self.t_out)
        out = w.reshape(c_out, c_in * kernel) @ self.cols
        if b is not None:
            out = out + b[:, None]
        return out

    def backward(self, grad):
        x, w = self.inputs[0], self.inputs[1]
        c_in, length = x.shape
        c_out, _, kernel = w.shape
        gw = (grad @ self.cols.T).reshape(w.shape)
        gcols = w.data.reshape(c_out, c_in * kernel).T @ grad
        gxp = _overlap_add_1d(gcols, c_in, kernel, self.stride, length + 2 * self.padding)
        gx = gxp[:, self.padding:self.padding + length]
        if len(self.inputs) == 3:
            return gx, gw, grad.sum(axis=1)
        return gx, gw


class ConvTranspose1d(Function):
    """
    Adjoint of `Conv1d` for weights (C_in, C_out, K). The full overlap-add output is
    cropped by `padding` at the head and to `length` samples.
    """

    def forward(self, y, w, b=None, *, stride: int = 1, padding: int = 0, length: int):
        c_in, frames = y.shape
        _, c_out, kernel = w.shape
        self.stride, self.padding, self.length = stride, padding, length
        self.full = max((frames - 1) * stride + kernel, padding + length)
        cols = w.reshape(c_in, c_out * kernel).T @ y
        out = _overlap_add_1d(cols, c_out, kernel, stride, self.full)[:, padding:padding + length]
        if b is not None:
            out = out + b[:, None]
        return out

    def backward(self, grad):
        y, w = self.inputs[0], self.inputs[1]
        c_in, frames = y.shape
        _, c_out, kernel = w.shape
        gfull = np.zeros((c_out, self.full), dtype=grad.dtype)
        gfull[:, self.padding:self.padding + self.length] = grad
        gcols = _windows_1d(gfull, kernel, self.stride, frames)
        gy = w.data.reshape(c_in, c_out * kernel) @ gcols
        gw = (y.data @ gcols.T).reshape(w.shape)
        if len(self.inputs) == 3:
            return gy, gw, grad.sum(axis=1)
        return gy, gw


class Conv2d(Function):
    """Cross-correlation of (C_in, H, W) with weights (C_out, C_in, KH, KW)."""

    def forward(
        self,
        x,
        w,
        b=None,
        *,
        stride: Tuple[int, int] = (1, 1),
        padding: Tuple[int, int] = (0, 0),
    ):
        c_in, height, width = x.shape
        c_out, _, kh, kw = w.shape
        (sh, sw), (ph, pw) = stride, padding
        self.stride, self.padding = (sh, sw), (ph, pw)
        self.h_out = (height + 2 * ph - kh) // sh + 1
        self.w_out = (width + 2 * pw - kw) // sw + 1
        xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
        view = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::sh, ::sw][:, :self.h_out, :self.w_out]
        self.cols = view.transpose(0, 3, 4, 1, 2).reshape(c_in * kh * kw, self.h_out * self.w_out)
        out = (w.reshape(c_out, -1) @ self.cols).reshape(c_out, self.h_out, self.w_out)
        if b is not None:
            out = out + b[:, None, None]
        return out

    def backward(self, grad):
        x, w = self.inputs[0], self.inputs[1]
        c_in, height, width = x.shape
        c_out, _, kh, kw = w.shape
        (sh, sw), (ph, pw) = self.stride, self.padding
        g2 = grad.reshape(c_out, -1)
        gw = (g2 @ self.cols.T).reshape(w.shape)
        gcols = (w.data.reshape(c_out, -1).T @ g2).reshape(c_in, kh, kw, self.h_out, self.w_out)
        gxp = np.zeros((c_in, height + 2 * ph, width + 2 * pw), dtype=grad.dtype)
        h_span = sh * (self.h_out - 1) + 1
        w_span = sw * (self.w_out - 1) + 1
        for i in range(kh):
            for j in range(kw):
                gxp[:, i:i + h_span:sh, j:j + w_span:sw] += gcols[:, i, j]
        gx = gxp[:, ph:ph + height, pw:pw + width]
        if len(self.inputs) == 3:
            return gx, gw, grad.sum(axis=(1, 2))
        return gx, gw


class StraightThrough(Function):
    """Forward value `quantized` exactly, gradient identity to `x`."""

    def forward(self, x, *, quantized: np.ndarray):
        return np.array(quantized, dtype=x.dtype, copy=True)

    def backward(self, grad):
        return (grad,)


def straight_through(x, quantized: np.ndarray):
    return StraightThrough.apply(x, quantized=quantized)
