'''
Forward-only network blocks: convolutions, FPEMs, the toy backbone, and the detection head
'''

from .layers import BNParams, conv2d, batch_norm, separable_conv, relu, upsample_to
from .weights import WeightStore, Architecture, init_weights, zero_weights
from .weights import detection_architecture, recognition_architecture
from .fpem import fpem, enhance, fuse, enhance_and_fuse
from .model import DetectionOutput, toy_backbone, detection_head, detect

__all__ = [
    "BNParams", "conv2d", "batch_norm", "separable_conv", "relu", "upsample_to",
    "WeightStore", "Architecture", "init_weights", "zero_weights",
    "detection_architecture", "recognition_architecture", "fpem", "enhance", "fuse",
    "enhance_and_fuse", "DetectionOutput", "toy_backbone", "detection_head", "detect"
]
