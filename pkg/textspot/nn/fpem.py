''' Feature Pyramid Enhancement Module and the fusion of the enhanced pyramid '''

from typing import Sequence

from ..errors import TensorError
from ..tensor import TensorMap, concat_channels, elementwise
from .layers import separable_conv, upsample_to
from .weights import WeightStore

Pyramid = list[TensorMap]


def check_pyramid(pyramid: Sequence[TensorMap]):
    ''' Four [C,H,W] levels, each exactly half the size of the previous one '''
    if len(pyramid) != 4:
        raise TensorError(f"A pyramid has 4 levels, got {len(pyramid)}")

    channels = pyramid[0].dims[0]
    for (level, fmap) in enumerate(pyramid):
        if fmap.rank != 3 or fmap.dims[0] != channels:
            raise TensorError(f"Level {level} has dims {list(fmap.dims)}, "
                              f"expected {channels} channels")
        if level > 0:
            (_, finer_h, finer_w) = pyramid[level - 1].dims
            (_, height, width) = fmap.dims
            if (finer_h, finer_w) != (2 * height, 2 * width):
                raise TensorError(f"Level {level} ({height}x{width}) is not half of "
                                  f"level {level - 1} ({finer_h}x{finer_w})")


def _sepconv(x: TensorMap, weights: WeightStore, prefix: str, stride: int = 1) -> TensorMap:
    return separable_conv(x, weights.get(f"{prefix}.dw"), weights.get(f"{prefix}.pw"),
                          weights.bn(prefix), stride=stride)


def fpem(pyramid: Sequence[TensorMap], weights: WeightStore, prefix: str) -> Pyramid:
    '''
        One enhancement pass over a stride 4/8/16/32 pyramid.

        Up-scale phase (coarse to fine), down-scale phase (fine to coarse),
        then each level is added to its input.
    '''
    check_pyramid(pyramid)

    up = list(pyramid)
    for level in (2, 1, 0):
        (_, height, width) = pyramid[level].dims
        upsampled = upsample_to(up[level + 1], height, width)
        up[level] = _sepconv(elementwise(pyramid[level], upsampled, "add"),
                             weights, f"{prefix}.up{level}")

    down = [up[0]]
    for level in (1, 2, 3):
        reduced = _sepconv(down[level - 1], weights, f"{prefix}.down{level}", stride=2)
        if reduced.dims != up[level].dims:
            raise TensorError(f"Down-scaled level {level} has dims {list(reduced.dims)}, "
                              f"expected {list(up[level].dims)}")
        down.append(_sepconv(elementwise(up[level], reduced, "add"),
                             weights, f"{prefix}.join{level}"))

    return [elementwise(pyramid[level], down[level], "add") for level in range(4)]


def enhance(pyramid: Sequence[TensorMap], weights: WeightStore, n_stk: int) -> Pyramid:
    ''' Apply n_stk FPEMs one after another '''
    if n_stk < 0:
        raise TensorError(f"n_stk must not be negative, got {n_stk}")

    check_pyramid(pyramid)
    result = list(pyramid)
    for index in range(n_stk):
        result = fpem(result, weights, f"fpem{index}")
    return result


def fuse(pyramid: Sequence[TensorMap]) -> TensorMap:
    ''' Upsample all levels to stride 4 and concatenate along channels '''
    (_, height, width) = pyramid[0].dims
    return concat_channels([upsample_to(fmap, height, width) for fmap in pyramid])


def enhance_and_fuse(pyramid: Sequence[TensorMap], weights: WeightStore,
                     n_stk: int) -> TensorMap:
    ''' F_f: n_stk FPEMs followed by fusion '''
    return fuse(enhance(pyramid, weights, n_stk))
