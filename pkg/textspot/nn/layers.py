''' Forward-only building blocks: convolution, batch norm, and separable convolution '''

from dataclasses import dataclass
from typing import Optional

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view

from ..errors import TensorError
from ..tensor import TensorMap, bilinear_resize

BN_EPSILON = 1e-5


@dataclass(frozen=True)
class BNParams:
    ''' Inference-mode batch norm parameters, one entry per channel '''
    gamma: TensorMap
    beta: TensorMap
    mean: TensorMap
    var: TensorMap

    @classmethod
    def identity(cls, channels: int) -> 'BNParams':
        ''' Parameters that leave the input unchanged (up to epsilon) '''
        return cls(TensorMap.full([channels], 1.0), TensorMap.zeros([channels]),
                   TensorMap.zeros([channels]), TensorMap.full([channels], 1.0 - BN_EPSILON))


def _output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    out = (size + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise TensorError(f"Kernel {kernel} with pad {pad} does not fit input size {size}")
    return out


def conv2d(x: TensorMap, weight: TensorMap, bias: Optional[TensorMap] = None,
           stride: int = 1, pad: int = 0, groups: int = 1) -> TensorMap:
    '''
        Cross-correlation of a [C,H,W] input with a [Cout,C/groups,kh,kw] kernel.

        groups == C gives a depthwise convolution.
    '''
    if x.rank != 3 or weight.rank != 4:
        raise TensorError(f"conv2d expects [C,H,W] and [Cout,Cin,kh,kw], "
                          f"got {list(x.dims)} and {list(weight.dims)}")
    if stride < 1 or pad < 0:
        raise TensorError(f"Invalid stride {stride} or pad {pad}")

    channels, height, width = x.dims
    out_channels, group_in, kernel_h, kernel_w = weight.dims

    if channels % groups != 0 or out_channels % groups != 0 or group_in * groups != channels:
        raise TensorError(f"Weight {list(weight.dims)} does not match {channels} input "
                          f"channels with {groups} groups")
    if bias is not None and bias.dims != (out_channels,):
        raise TensorError(f"Bias needs dims [{out_channels}], got {list(bias.dims)}")

    out_h = _output_size(height, kernel_h, stride, pad)
    out_w = _output_size(width, kernel_w, stride, pad)

    padded = np.pad(x.array, ((0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(padded, (kernel_h, kernel_w), axis=(1, 2))
    windows = windows[:, ::stride, ::stride][:, :out_h, :out_w]

    # [groups, Cin/g, H', W', kh, kw] x [groups, Cout/g, Cin/g, kh, kw]
    windows = windows.reshape(groups, group_in, out_h, out_w, kernel_h, kernel_w)
    kernels = weight.array.reshape(groups, out_channels // groups, group_in, kernel_h, kernel_w)
    out = np.einsum('gchwij,gocij->gohw', windows, kernels, optimize=True)
    out = out.reshape(out_channels, out_h, out_w)

    if bias is not None:
        out = out + bias.array[:, None, None]

    return TensorMap(out)


def batch_norm(x: TensorMap, gamma: TensorMap, beta: TensorMap, mean: TensorMap,
               var: TensorMap, eps: float = BN_EPSILON) -> TensorMap:
    ''' y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel '''
    channels = x.dims[0]
    for (name, param) in (("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)):
        if param.dims != (channels,):
            raise TensorError(f"BN {name} needs dims [{channels}], got {list(param.dims)}")

    def per_channel(param: TensorMap) -> np.ndarray:
        return param.array.astype(np.float64).reshape((channels,) + (1,) * (x.rank - 1))

    scale = per_channel(gamma) / np.sqrt(per_channel(var) + eps)
    out = (x.array.astype(np.float64) - per_channel(mean)) * scale + per_channel(beta)
    return TensorMap(out)


def apply_bn(x: TensorMap, params: BNParams) -> TensorMap:
    ''' batch_norm with a BNParams bundle '''
    return batch_norm(x, params.gamma, params.beta, params.mean, params.var)


def relu(x: TensorMap) -> TensorMap:
    ''' max(x, 0) '''
    return TensorMap(np.maximum(x.array, 0.0))


def conv_bn_relu(x: TensorMap, weight: TensorMap, bn_params: BNParams,
                 stride: int = 1, pad: int = 0) -> TensorMap:
    ''' Regular convolution followed by BN and ReLU '''
    return relu(apply_bn(conv2d(x, weight, stride=stride, pad=pad), bn_params))


def separable_conv(x: TensorMap, dw_weight: TensorMap, pw_weight: TensorMap,
                   bn_params: BNParams, stride: int = 1) -> TensorMap:
    ''' 3×3 depthwise conv (pad 1), 1×1 pointwise conv, BN, ReLU '''
    channels = x.dims[0]
    if dw_weight.dims != (channels, 1, 3, 3):
        raise TensorError(f"Depthwise weight needs dims [{channels},1,3,3], "
                          f"got {list(dw_weight.dims)}")
    if pw_weight.rank != 4 or pw_weight.dims[1:] != (channels, 1, 1):
        raise TensorError(f"Pointwise weight needs dims [Cout,{channels},1,1], "
                          f"got {list(pw_weight.dims)}")

    depthwise = conv2d(x, dw_weight, stride=stride, pad=1, groups=channels)
    pointwise = conv2d(depthwise, pw_weight)
    return relu(apply_bn(pointwise, bn_params))


def upsample_to(x: TensorMap, height: int, width: int) -> TensorMap:
    ''' Bilinear upsampling to a given spatial size '''
    return bilinear_resize(x, height, width)
