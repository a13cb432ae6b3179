''' Ground-truth label generation: text regions, shrunk text kernels, and instance maps '''

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GeometryError, TensorError
from .geometry import Polygon, TextAnnotation, area, perimeter, raster_mask, shrink
from .tensor import TensorMap

DEFAULT_SHRINK_RATE = 0.7


class InstanceLabelMap:
    ''' An H×W map of instance ids; 0 is background and ids are contiguous '''

    def __init__(self, labels, contiguous: bool = True):
        labels = np.array(labels, dtype=np.int32)
        if labels.ndim != 2:
            raise TensorError(f"Instance maps are two-dimensional, got {labels.shape}")
        if labels.size and labels.min() < 0:
            raise TensorError("Instance ids must not be negative")

        present = np.unique(labels[labels > 0])
        if contiguous and len(present) and (present[0] != 1 or present[-1] != len(present)):
            raise TensorError(f"Instance ids are not contiguous: {present.tolist()}")

        labels.flags.writeable = False
        self._labels = labels

    @classmethod
    def empty(cls, height: int, width: int) -> 'InstanceLabelMap':
        ''' A map with no instances '''
        return cls(np.zeros((height, width), dtype=np.int32))

    @classmethod
    def compacted(cls, labels) -> 'InstanceLabelMap':
        ''' Relabel arbitrary non-negative ids to 1..N, keeping their order '''
        labels = np.asarray(labels)
        present = np.unique(labels[labels > 0])
        lookup = np.zeros(int(labels.max(initial=0)) + 1, dtype=np.int32)
        lookup[present] = np.arange(1, len(present) + 1, dtype=np.int32)
        return cls(lookup[labels])

    @property
    def height(self) -> int:
        ''' Number of rows '''
        return self._labels.shape[0]

    @property
    def width(self) -> int:
        ''' Number of columns '''
        return self._labels.shape[1]

    @property
    def labels(self) -> np.ndarray:
        ''' Read-only [H, W] array of ids '''
        return self._labels

    @property
    def num_instances(self) -> int:
        ''' N, the largest id '''
        return int(self._labels.max(initial=0))

    def mask(self, instance_id: int) -> np.ndarray:
        ''' Boolean mask of one instance '''
        return self._labels == instance_id

    def to_tensor(self) -> TensorMap:
        ''' Float-encoded [1, H, W] copy for PTM output '''
        return TensorMap(self._labels[None].astype(np.float32))

    @classmethod
    def from_tensor(cls, tensor: TensorMap, contiguous: bool = True) -> 'InstanceLabelMap':
        ''' Read back a float-encoded instance map '''
        values = tensor.array.reshape(tensor.dims[-2:])
        if not np.array_equal(values, np.round(values)):
            raise TensorError("Instance map contains non-integer ids")
        return cls(values.astype(np.int32), contiguous=contiguous)

    def __eq__(self, other):
        if not isinstance(other, InstanceLabelMap):
            return NotImplemented
        return np.array_equal(self._labels, other.labels)


@dataclass(frozen=True)
class LabelSet:
    ''' All supervision maps for one image '''
    g_tex: TensorMap
    g_ker: TensorMap
    instances: InstanceLabelMap
    kernel_instances: InstanceLabelMap
    ignore_mask: TensorMap

    def to_tensors(self) -> dict[str, TensorMap]:
        ''' Named tensors, as written by the gen-labels command '''
        return {
            "g_tex": self.g_tex,
            "g_ker": self.g_ker,
            "instances": self.instances.to_tensor(),
            "kernel_instances": self.kernel_instances.to_tensor(),
            "ignore_mask": self.ignore_mask,
        }


def shrink_margin(poly: Polygon, rate: float) -> float:
    ''' m = Area × (1 − r²) / Perimeter '''
    if not 0.0 <= rate <= 1.0:
        raise GeometryError(f"Shrink rate must be within [0, 1], got {rate}")
    return area(poly) * (1.0 - rate * rate) / perimeter(poly)


def kernel_polygon(poly: Polygon, rate: float) -> Polygon:
    ''' The shrunk kernel of a text polygon, falling back to the polygon itself '''
    kernel = shrink(poly, shrink_margin(poly, rate))
    return poly if kernel is None else kernel


def generate_labels(annotations: Sequence[TextAnnotation], height: int, width: int,
                    rate: float = DEFAULT_SHRINK_RATE) -> LabelSet:
    '''
        Paint text regions and kernels of all annotations.

        Later annotations overwrite earlier ones; ignore-flagged annotations
        only go into the ignore mask.
    '''
    if height < 1 or width < 1:
        raise TensorError(f"Invalid canvas size {height}x{width}")
    if not 0.0 <= rate <= 1.0:
        raise GeometryError(f"Shrink rate must be within [0, 1], got {rate}")

    instances = np.zeros((height, width), dtype=np.int32)
    kernels = np.zeros((height, width), dtype=np.int32)
    ignore = np.zeros((height, width), dtype=bool)

    next_id = 1
    for annotation in annotations:
        region = raster_mask(annotation.polygon, height, width)

        if annotation.ignore:
            ignore |= region
            continue

        kernel = raster_mask(kernel_polygon(annotation.polygon, rate), height, width)

        instances[region] = next_id
        kernels[kernel] = next_id
        next_id += 1

    # Kernels whose text region was painted over entirely disappear with it
    kernels[~np.isin(kernels, np.unique(instances))] = 0

    instance_map = InstanceLabelMap.compacted(instances)
    lookup = np.zeros(next_id, dtype=np.int32)
    lookup[instances] = instance_map.labels
    # A kernel may be painted over while part of its region survives,
    # so its ids follow the region ids and need not be contiguous
    kernel_map = InstanceLabelMap(lookup[kernels], contiguous=False)

    return LabelSet(
        g_tex=TensorMap((instances > 0)[None]),
        g_ker=TensorMap((kernels > 0)[None]),
        instances=instance_map,
        kernel_instances=kernel_map,
        ignore_mask=TensorMap(ignore[None]),
    )
