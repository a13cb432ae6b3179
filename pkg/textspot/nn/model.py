''' The toy backbone, the detection head, and the full detection forward pass '''

from dataclasses import dataclass

import numpy as np

from scipy.special import expit

from ..config import ModelConfig
from ..errors import TensorError
from ..tensor import TensorMap
from .fpem import Pyramid, enhance_and_fuse
from .layers import conv2d, conv_bn_relu, separable_conv
from .weights import WeightStore

# Sigmoid outputs stay strictly inside (0, 1)
PROB_LOW = np.finfo(np.float32).tiny
PROB_HIGH = np.nextafter(np.float32(1.0), np.float32(0.0))


@dataclass(frozen=True)
class DetectionOutput:
    ''' Predictions at stride 4 '''
    p_tex: TensorMap
    p_ker: TensorMap
    emb: TensorMap


def check_input_size(height: int, width: int, multiple: int = 32):
    ''' Raise an error that names the padded size if the input cannot be used '''
    if height % multiple != 0 or width % multiple != 0:
        pad_h = -(-height // multiple) * multiple
        pad_w = -(-width // multiple) * multiple
        raise TensorError(f"Input is {height}x{width}, but both sides must be divisible "
                          f"by {multiple}; pad it to {pad_h}x{pad_w}")


def toy_backbone(image: TensorMap, weights: WeightStore) -> Pyramid:
    '''
        Stride-2 stem plus four stride-2 separable stages, then 1×1 reductions
        to the enhanced channel count: levels at strides 4, 8, 16, 32
    '''
    if image.rank != 3 or image.dims[0] != 3:
        raise TensorError(f"Expected a [3,H,W] image, got {list(image.dims)}")
    check_input_size(image.dims[1], image.dims[2])

    features = conv_bn_relu(image, weights.get("backbone.stem.conv"),
                            weights.bn("backbone.stem"), stride=2, pad=1)

    stages = []
    for stage in range(4):
        prefix = f"backbone.stage{stage}"
        features = separable_conv(features, weights.get(f"{prefix}.dw"),
                                  weights.get(f"{prefix}.pw"), weights.bn(prefix), stride=2)
        stages.append(features)

    return [conv_bn_relu(fmap, weights.get(f"backbone.reduce{level}.conv"),
                         weights.bn(f"backbone.reduce{level}"))
            for (level, fmap) in enumerate(stages)]


def detection_head(f_f: TensorMap, weights: WeightStore, cfg: ModelConfig) -> DetectionOutput:
    ''' conv3×3 + BN + ReLU, then conv1×1 to text, kernel, and instance vector channels '''
    if f_f.rank != 3 or f_f.dims[0] != cfg.fused_channels:
        raise TensorError(f"F_f needs {cfg.fused_channels} channels, got {list(f_f.dims)}")

    hidden = conv_bn_relu(f_f, weights.get("head.conv"), weights.bn("head"), pad=1)
    out = conv2d(hidden, weights.get("head.out.weight"), weights.get("head.out.bias"))

    def probability(channel: int) -> TensorMap:
        values = expit(out.array[channel:channel + 1].astype(np.float64))
        return TensorMap(np.clip(values, PROB_LOW, PROB_HIGH))

    return DetectionOutput(p_tex=probability(0), p_ker=probability(1),
                           emb=TensorMap(out.array[2:]))


def detect(image: TensorMap, weights: WeightStore, cfg: ModelConfig) -> DetectionOutput:
    ''' Backbone, FPEMs, fusion, and head in one call '''
    pyramid = toy_backbone(image, weights)
    return detection_head(enhance_and_fuse(pyramid, weights, cfg.n_stk), weights, cfg)
