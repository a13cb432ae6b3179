'''
Pixel Aggregation: grows text kernels over the text region, guided by instance vectors.
'''

from collections import deque
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from scipy import ndimage

from .config import PAConfig
from .errors import GeometryError, TensorError
from .geometry import Polygon
from .labelgen import InstanceLabelMap
from .tensor import TensorMap

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)

# Directions on the pixel-corner grid (dx, dy); y points down
EAST, SOUTH, WEST, NORTH = (1, 0), (0, 1), (-1, 0), (0, -1)
_TURN_RIGHT = {EAST: SOUTH, SOUTH: WEST, WEST: NORTH, NORTH: EAST}
_TURN_LEFT = {value: key for (key, value) in _TURN_RIGHT.items()}

# (row, col) offsets of the pixels ahead-left and ahead-right of a corner
_AHEAD = {
    EAST: ((-1, 0), (0, 0)),
    SOUTH: ((0, 0), (0, -1)),
    WEST: ((0, -1), (-1, -1)),
    NORTH: ((-1, -1), (-1, 0)),
}


@dataclass(frozen=True, eq=False)
class TextInstance:
    ''' One detected text line '''
    id: int
    pixels: np.ndarray
    shape: tuple[int, int]
    contour: Polygon
    image_contour: Polygon
    confidence: float
    transcription: str = ""

    @property
    def mask(self) -> np.ndarray:
        ''' Boolean [H, W] mask of the instance at map resolution '''
        result = np.zeros(self.shape[0] * self.shape[1], dtype=bool)
        result[self.pixels] = True
        return result.reshape(self.shape)

    @property
    def area(self) -> int:
        ''' Number of pixels at map resolution '''
        return len(self.pixels)

    def with_transcription(self, text: str) -> 'TextInstance':
        ''' A copy carrying a recognized transcription '''
        return replace(self, transcription=text)


def _as_mask(tensor: TensorMap, name: str) -> np.ndarray:
    if tensor.rank == 3 and tensor.dims[0] == 1:
        return tensor.array[0]
    if tensor.rank == 2:
        return tensor.array
    raise TensorError(f"{name} must be [1,H,W] or [H,W], got {list(tensor.dims)}")


def connected_components(mask: TensorMap | np.ndarray, min_area: int = 0) -> InstanceLabelMap:
    '''
        4-connected components, numbered from 1 in raster order of their first pixel.
        Components with fewer than min_area pixels are removed.
    '''
    if isinstance(mask, TensorMap):
        mask = _as_mask(mask, "mask") > 0.5
    mask = np.asarray(mask, dtype=bool)

    (labels, count) = ndimage.label(mask, structure=FOUR_CONNECTED)
    if count == 0:
        return InstanceLabelMap.empty(*mask.shape)

    flat = labels.reshape(-1)
    (ids, first_index) = np.unique(flat, return_index=True)
    (ids, first_index) = (ids[1:], first_index[1:])
    sizes = np.bincount(flat, minlength=count + 1)

    lookup = np.zeros(count + 1, dtype=np.int32)
    next_id = 1
    for label in ids[np.argsort(first_index)]:
        if sizes[label] >= min_area:
            lookup[label] = next_id
            next_id += 1

    return InstanceLabelMap(lookup[labels])


def grow_kernels(kernels: InstanceLabelMap, region: np.ndarray, emb: TensorMap,
                 dist_threshold: float) -> np.ndarray:
    '''
        Multi-source breadth-first growth of labeled kernels over a region.

        The queue starts with all kernel pixels ordered by (kernel id, raster
        index). A 4-neighbor is claimed if it is an unassigned region pixel
        whose instance vector lies closer than dist_threshold to the mean
        vector of the claiming kernel. Kernel means are computed once.

        Returns the [H, W] label array after growth.
    '''
    (height, width) = kernels.labels.shape
    if emb.rank != 3 or emb.dims[1:] != (height, width):
        raise TensorError(f"Instance vectors are {list(emb.dims)}, "
                          f"expected [D,{height},{width}]")

    labels = kernels.labels.reshape(-1).copy()
    count = kernels.num_instances
    if count == 0:
        return labels.reshape(height, width)

    vectors = emb.array.astype(np.float64).reshape(emb.dims[0], -1)
    sums = np.zeros((emb.dims[0], count + 1))
    for axis in range(emb.dims[0]):
        sums[axis] = np.bincount(labels, weights=vectors[axis], minlength=count + 1)
    means = sums[:, 1:] / np.bincount(labels, minlength=count + 1)[1:]

    # gates[k - 1][p] tells whether kernel k may claim pixel p
    gates = [(np.linalg.norm(vectors - means[:, k:k + 1], axis=0) < dist_threshold).tolist()
             for k in range(count)]

    seeds = np.flatnonzero(labels)
    seeds = seeds[np.lexsort((seeds, labels[seeds]))]

    open_pixels = (np.asarray(region, dtype=bool).reshape(-1) & (labels == 0)).tolist()
    assigned = labels.tolist()
    queue = deque(seeds.tolist())

    while queue:
        pixel = queue.popleft()
        kernel_id = assigned[pixel]
        gate = gates[kernel_id - 1]
        (row, col) = divmod(pixel, width)

        # up, down, left, right
        neighbors = []
        if row > 0:
            neighbors.append(pixel - width)
        if row < height - 1:
            neighbors.append(pixel + width)
        if col > 0:
            neighbors.append(pixel - 1)
        if col < width - 1:
            neighbors.append(pixel + 1)

        for neighbor in neighbors:
            if open_pixels[neighbor] and gate[neighbor]:
                open_pixels[neighbor] = False
                assigned[neighbor] = kernel_id
                queue.append(neighbor)

    return np.array(assigned, dtype=np.int32).reshape(height, width)


def extract_contour(pixels: np.ndarray, scale: float = 1.0) -> Polygon:
    '''
        Outer boundary of a pixel set as a polygon on pixel corners.

        The boundary is followed with the region on the right, starting at the
        top edge of the first pixel in raster order. Only corners where the
        direction changes become vertices.
    '''
    pixels = np.asarray(pixels, dtype=bool)
    if not pixels.any():
        raise GeometryError("Cannot extract the contour of an empty region")

    (height, width) = pixels.shape

    def inside(row: int, col: int) -> bool:
        return 0 <= row < height and 0 <= col < width and bool(pixels[row, col])

    (start_row, start_col) = np.argwhere(pixels)[0]
    start = (int(start_col), int(start_row))
    (x, y) = start
    direction = EAST
    vertices = [start]

    for _ in range(4 * (height + 1) * (width + 1)):
        (x, y) = (x + direction[0], y + direction[1])

        ((left_dr, left_dc), (right_dr, right_dc)) = _AHEAD[direction]
        if inside(y + left_dr, x + left_dc):
            turned = _TURN_LEFT[direction]
        elif inside(y + right_dr, x + right_dc):
            turned = direction
        else:
            turned = _TURN_RIGHT[direction]

        if (x, y) == start and turned == EAST:
            return Polygon(np.array(vertices, dtype=np.float64) * scale)
        if turned != direction:
            vertices.append((x, y))
        direction = turned

    raise GeometryError("Boundary tracing did not return to its start")


def _make_instances(labels: np.ndarray, p_tex: np.ndarray, cfg: PAConfig) -> list[TextInstance]:
    ''' Filter grown regions by area and confidence and renumber the survivors '''
    flat = labels.reshape(-1)
    scores = p_tex.reshape(-1).astype(np.float64)
    count = int(flat.max(initial=0))

    sizes = np.bincount(flat, minlength=count + 1)
    score_sums = np.bincount(flat, weights=scores, minlength=count + 1)

    instances = []
    for label in range(1, count + 1):
        if sizes[label] == 0 or sizes[label] < cfg.min_instance_area:
            continue
        confidence = float(score_sums[label] / sizes[label])
        if confidence < cfg.min_confidence:
            continue

        mask = flat == label
        pixels = np.flatnonzero(mask)
        contour = extract_contour(mask.reshape(labels.shape))
        instances.append(TextInstance(
            id=len(instances) + 1,
            pixels=pixels,
            shape=labels.shape,
            contour=contour,
            image_contour=contour.scaled(cfg.scale),
            confidence=confidence,
        ))

    return instances


def _check_inputs(p_tex: TensorMap, p_ker: TensorMap, emb: TensorMap):
    if p_tex.dims != p_ker.dims or p_tex.rank != 3 or p_tex.dims[0] != 1:
        raise TensorError(f"p_tex and p_ker must both be [1,H,W], "
                          f"got {list(p_tex.dims)} and {list(p_ker.dims)}")
    if emb.rank != 3 or emb.dims[1:] != p_tex.dims[1:]:
        raise TensorError(f"Instance vectors are {list(emb.dims)}, "
                          f"expected [D,{p_tex.dims[1]},{p_tex.dims[2]}]")


def kernel_components(p_tex: TensorMap, p_ker: TensorMap,
                      cfg: PAConfig) -> tuple[InstanceLabelMap, np.ndarray]:
    ''' Labeled kernels (kernel ∧ region) and the binary region mask '''
    region = p_tex.array[0] >= cfg.tex_threshold
    kernel_mask = (p_ker.array[0] >= cfg.ker_threshold) & region
    return connected_components(kernel_mask, cfg.min_kernel_area), region


def aggregate(p_tex: TensorMap, p_ker: TensorMap, emb: TensorMap,
              cfg: PAConfig) -> list[TextInstance]:
    ''' Pixel Aggregation of one set of predictions into text instances '''
    _check_inputs(p_tex, p_ker, emb)

    (kernels, region) = kernel_components(p_tex, p_ker, cfg)
    if kernels.num_instances == 0:
        return []

    labels = grow_kernels(kernels, region, emb, cfg.dist_threshold)
    return _make_instances(labels, p_tex.array[0], cfg)


def segment_regions(p_tex: TensorMap, cfg: PAConfig) -> list[TextInstance]:
    ''' Region-only baseline: every connected text region is one instance '''
    region = _as_mask(p_tex, "p_tex") >= cfg.tex_threshold
    components = connected_components(region)
    return _make_instances(components.labels, _as_mask(p_tex, "p_tex"), cfg)


def instances_to_label_map(instances: Sequence[TextInstance], height: int,
                           width: int) -> InstanceLabelMap:
    ''' Paint instances into a label map, numbering them by list position '''
    labels = np.zeros(height * width, dtype=np.int32)
    for (index, instance) in enumerate(instances):
        if instance.shape != (height, width):
            raise TensorError(f"Instance {instance.id} belongs to a {instance.shape} map, "
                              f"not {height}x{width}")
        labels[instance.pixels] = index + 1
    return InstanceLabelMap.compacted(labels.reshape(height, width))
