''' Masked RoI extraction: crop, mask, and resize instance features '''

from dataclasses import dataclass

import numpy as np

from ..errors import RecognitionError
from ..tensor import TensorMap, bilinear_resize

ROI_HEIGHT = 8
ROI_WIDTH = 32


@dataclass(frozen=True)
class RoiPatch:
    ''' Fixed-size features of one text instance '''
    features: TensorMap
    instance_id: int = 0

    def __post_init__(self):
        if self.features.rank != 3:
            raise RecognitionError(f"RoI features need dims [C,h,w], "
                                   f"got {list(self.features.dims)}")

    @property
    def channels(self) -> int:
        ''' C '''
        return self.features.dims[0]

    def flattened(self) -> np.ndarray:
        ''' The features as [h·w, C] rows, one per position '''
        return self.features.array.reshape(self.channels, -1).T


def bounding_rect(mask: np.ndarray) -> tuple[int, int, int, int]:
    ''' (top, left, bottom, right) with exclusive bottom/right '''
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if len(rows) == 0:
        raise RecognitionError("Cannot extract a RoI from an empty mask")
    return int(rows[0]), int(cols[0]), int(rows[-1]) + 1, int(cols[-1]) + 1


def masked_roi(f: TensorMap, mask: np.ndarray | TensorMap, height: int = ROI_HEIGHT,
               width: int = ROI_WIDTH, use_mask: bool = True, instance_id: int = 0) -> RoiPatch:
    '''
        Crop the bounding rectangle of the mask out of f, zero the features
        outside the mask, and resize to height × width.

        With use_mask=False the features are only cropped and resized.
    '''
    if isinstance(mask, TensorMap):
        mask = mask.array.reshape(mask.dims[-2:]) > 0.5
    mask = np.asarray(mask, dtype=bool)

    if f.rank != 3 or f.dims[1:] != mask.shape:
        raise RecognitionError(f"Feature map {list(f.dims)} does not match "
                               f"mask {list(mask.shape)}")

    (top, left, bottom, right) = bounding_rect(mask)
    crop = f.array[:, top:bottom, left:right]
    if use_mask:
        crop = crop * mask[None, top:bottom, left:right]

    return RoiPatch(bilinear_resize(TensorMap(crop), height, width), instance_id)
