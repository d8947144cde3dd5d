"""
Dense float64 tensors and the low-level kernels the network is built from.

A Tensor is a C-contiguous ``numpy.ndarray`` of dtype float64. Feature maps are laid out as
[channels, height, width]; convolution kernels as [out_channels, in_channels, kh, kw].
Convolution is valid cross-correlation (no flip, no padding), evaluated as a direct loop over
kernel offsets so every output element is an explicit sum of products.
"""

import numpy as np
import numpy.typing as npt

from .errors import DimensionError, ParameterError

Tensor = npt.NDArray[np.float64]

real_type = np.float64

_SIGMOID_EPS = np.finfo(real_type).eps


def as_tensor(values, ndim=None, name="tensor"):
    tensor = np.ascontiguousarray(values, dtype=real_type)
    if ndim is not None and tensor.ndim != ndim:
        raise DimensionError(f"{name}: expected {ndim} axes, got shape {tensor.shape}")
    if tensor.size == 0:
        raise DimensionError(f"{name}: empty shape {tensor.shape}")
    return tensor


def conv2d_forward(input, kernels, bias):
    input = as_tensor(input, 3, "input")
    kernels = as_tensor(kernels, 4, "kernels")
    bias = as_tensor(bias, 1, "bias")
    c_in, h, w = input.shape
    c_out, k_in, kh, kw = kernels.shape
    if k_in != c_in:
        raise DimensionError(f"conv2d_forward: kernel C_in={k_in} does not match input C={c_in}")
    if kh > h or kw > w:
        raise DimensionError(
            f"conv2d_forward: kernel Kh×Kw={kh}×{kw} exceeds input H×W={h}×{w}"
        )
    if bias.shape[0] != c_out:
        raise DimensionError(f"conv2d_forward: bias length {bias.shape[0]} != C_out={c_out}")

    out_h, out_w = h - kh + 1, w - kw + 1
    out = np.empty((c_out, out_h, out_w), dtype=real_type)
    out[...] = bias[:, None, None]
    for i in range(kh):
        for j in range(kw):
            window = input[:, i:i + out_h, j:j + out_w]
            out += np.tensordot(kernels[:, :, i, j], window, axes=(1, 0))
    return out


def conv2d_backward(input, kernels, grad_out):
    """
    Gradients of a scalar loss through ``conv2d_forward``: grad_input, grad_kernels and grad_bias.
    """
    input = as_tensor(input, 3, "input")
    kernels = as_tensor(kernels, 4, "kernels")
    grad_out = as_tensor(grad_out, 3, "grad_out")
    c_in, h, w = input.shape
    c_out, k_in, kh, kw = kernels.shape
    if k_in != c_in:
        raise DimensionError(f"conv2d_backward: kernel C_in={k_in} does not match input C={c_in}")
    out_h, out_w = h - kh + 1, w - kw + 1
    if grad_out.shape != (c_out, out_h, out_w):
        raise DimensionError(
            f"conv2d_backward: grad_out shape {grad_out.shape} != forward output "
            f"{(c_out, out_h, out_w)} (axes C_out, H', W')"
        )

    grad_input = np.zeros_like(input)
    grad_kernels = np.empty_like(kernels)
    grad_bias = grad_out.sum(axis=(1, 2))
    for i in range(kh):
        for j in range(kw):
            window = input[:, i:i + out_h, j:j + out_w]
            grad_kernels[:, :, i, j] = np.tensordot(grad_out, window, axes=([1, 2], [1, 2]))
            grad_input[:, i:i + out_h, j:j + out_w] += np.tensordot(
                kernels[:, :, i, j], grad_out, axes=(0, 0)
            )
    return grad_input, grad_kernels, grad_bias


def maxpool2x2(input):
    """
    2×2 max pooling with stride 2. The argmax mask returned next to the output holds, per output
    element, the row-major index (0..3) of the winning element in its window. Ties go to the
    first occurrence.
    """
    input = as_tensor(input, 3, "input")
    c, h, w = input.shape
    if h % 2 or w % 2:
        odd = [name for name, size in (("H", h), ("W", w)) if size % 2]
        raise DimensionError(f"maxpool2x2: odd {'/'.join(odd)} in input shape {input.shape}")
    windows = (
        input.reshape(c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, h // 2, w // 2, 4)
    )
    mask = windows.argmax(axis=-1)
    output = np.take_along_axis(windows, mask[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(output), mask


def maxpool2x2_backward(grad_out, argmax_mask):
    grad_out = as_tensor(grad_out, 3, "grad_out")
    if argmax_mask.shape != grad_out.shape:
        raise DimensionError(
            f"maxpool2x2_backward: mask shape {argmax_mask.shape} != grad_out shape {grad_out.shape}"
        )
    c, oh, ow = grad_out.shape
    windows = np.zeros((c, oh, ow, 4), dtype=real_type)
    np.put_along_axis(windows, argmax_mask[..., None], grad_out[..., None], axis=-1)
    return np.ascontiguousarray(
        windows.reshape(c, oh, ow, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, oh * 2, ow * 2)
    )


def _check_factor(factor):
    if isinstance(factor, bool) or int(factor) != factor or factor < 1:
        raise ParameterError(f"upsample factor must be a positive integer, got {factor!r}")
    return int(factor)


def upsample_nn(input, factor):
    input = as_tensor(input, 3, "input")
    factor = _check_factor(factor)
    return np.ascontiguousarray(input.repeat(factor, axis=1).repeat(factor, axis=2))


def upsample_nn_backward(grad_out, factor):
    grad_out = as_tensor(grad_out, 3, "grad_out")
    factor = _check_factor(factor)
    c, h, w = grad_out.shape
    if h % factor or w % factor:
        raise DimensionError(
            f"upsample_nn_backward: grad_out H×W={h}×{w} is not a multiple of factor {factor}"
        )
    return grad_out.reshape(c, h // factor, factor, w // factor, factor).sum(axis=(2, 4))


def tanh_forward(input):
    return np.tanh(input)


def tanh_backward(output, grad_out):
    return grad_out * (1.0 - output * output)


def sigmoid_forward(input):
    # tanh form: exact 0.5 at zero and no overflow for large |x|; kept inside the open interval (0, 1)
    return np.clip(0.5 * (1.0 + np.tanh(0.5 * input)), _SIGMOID_EPS, 1.0 - _SIGMOID_EPS)


def sigmoid_backward(output, grad_out):
    return grad_out * output * (1.0 - output)
