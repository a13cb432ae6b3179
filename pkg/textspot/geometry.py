''' Polygons, text annotations, and the polygon operations used for labels and evaluation '''

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pyclipper

from matplotlib.path import Path
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import AnnotationError, GeometryError
from .tensor import TensorMap
from .util import atomic_write

# Transcription that marks regions excluded from losses and evaluation
DO_NOT_CARE = "###"

# Clipper works on integer coordinates
CLIPPER_SCALE = 2 ** 16
MITER_LIMIT = 2.0


class Polygon:
    ''' A simple closed polygon in pixel coordinates (x right, y down) '''

    def __init__(self, vertices):
        points = np.array(vertices, dtype=np.float64)

        if points.ndim != 2 or points.shape[1] != 2:
            raise GeometryError(f"Vertices must be (x, y) pairs, got shape {points.shape}")
        if len(points) < 3:
            raise GeometryError(f"A polygon needs at least 3 vertices, got {len(points)}")
        if not np.isfinite(points).all():
            raise GeometryError("Polygon has non-finite coordinates")

        following = np.roll(points, -1, axis=0)
        if np.any(np.all(points == following, axis=1)):
            raise GeometryError("Polygon has identical consecutive vertices")

        shape = ShapelyPolygon(points)
        if shape.area == 0.0:
            raise GeometryError("Polygon is degenerate (zero area)")

        points.flags.writeable = False
        self._points = points
        self._shape = shape

    @property
    def outline(self) -> ShapelyPolygon:
        ''' The shapely view of this polygon '''
        return self._shape

    @property
    def vertices(self) -> np.ndarray:
        ''' The vertices as an (N, 2) array '''
        return self._points

    def __len__(self):
        return len(self._points)

    def __repr__(self):
        return f"Polygon({self._points.tolist()})"

    def scaled(self, factor: float) -> 'Polygon':
        ''' The same polygon with every coordinate multiplied by factor '''
        return Polygon(self._points * factor)

    def bounds(self) -> tuple[float, float, float, float]:
        ''' (min_x, min_y, max_x, max_y) '''
        min_x, min_y = self._points.min(axis=0)
        max_x, max_y = self._points.max(axis=0)
        return float(min_x), float(min_y), float(max_x), float(max_y)

    def to_flat(self) -> list[float]:
        ''' [x1, y1, x2, y2, ...] '''
        return self._points.reshape(-1).tolist()


def area(poly: Polygon) -> float:
    ''' Enclosed area in px² (absolute shoelace sum) '''
    return float(poly.outline.area)


def perimeter(poly: Polygon) -> float:
    ''' Length of the boundary, including the closing edge '''
    return float(poly.outline.exterior.length)


def shrink(poly: Polygon, margin: float) -> Optional[Polygon]:
    '''
        Offset a polygon inward by margin pixels.

        Uses miter joins (miter limit 2) and keeps the largest loop if the
        offset splits the polygon. Returns None if nothing is left.
    '''
    if margin < 0:
        raise GeometryError(f"Shrink margin must not be negative, got {margin}")
    if margin == 0:
        return poly

    path = pyclipper.scale_to_clipper(poly.vertices.tolist(), CLIPPER_SCALE)
    offset = pyclipper.PyclipperOffset(miter_limit=MITER_LIMIT)
    offset.AddPath(path, pyclipper.JT_MITER, pyclipper.ET_CLOSEDPOLYGON)
    loops = offset.Execute(-margin * CLIPPER_SCALE)

    loops = [loop for loop in loops if len(loop) >= 3 and pyclipper.Area(loop) != 0]
    if not loops:
        return None

    largest = max(loops, key=lambda loop: abs(pyclipper.Area(loop)))
    try:
        return Polygon(pyclipper.scale_from_clipper(largest, CLIPPER_SCALE))
    except GeometryError:
        return None


def raster_mask(poly: Polygon, height: int, width: int) -> np.ndarray:
    '''
        Boolean [height, width] mask of the pixels whose center lies inside
        the polygon (even-odd rule)
    '''
    mask = np.zeros((height, width), dtype=bool)

    min_x, min_y, max_x, max_y = poly.bounds()
    col_start = max(int(np.floor(min_x - 0.5)), 0)
    col_end = min(int(np.ceil(max_x - 0.5)) + 1, width)
    row_start = max(int(np.floor(min_y - 0.5)), 0)
    row_end = min(int(np.ceil(max_y - 0.5)) + 1, height)

    if col_start >= col_end or row_start >= row_end:
        return mask

    cols, rows = np.meshgrid(np.arange(col_start, col_end), np.arange(row_start, row_end))
    centers = np.stack([cols.ravel() + 0.5, rows.ravel() + 0.5], axis=1)

    inside = Path(poly.vertices).contains_points(centers, radius=0.0)
    mask[row_start:row_end, col_start:col_end] = inside.reshape(rows.shape)
    return mask


def rasterize(poly: Polygon, height: int, width: int) -> TensorMap:
    ''' Binary [1, height, width] mask of the polygon '''
    if height < 1 or width < 1:
        raise GeometryError(f"Invalid canvas size {height}x{width}")
    return TensorMap(raster_mask(poly, height, width)[None])


def polygon_iou(a: Polygon, b: Polygon, height: int, width: int) -> float:
    ''' Intersection over union of the two rasterized polygons '''
    mask_a = raster_mask(a, height, width)
    mask_b = raster_mask(b, height, width)

    union = np.count_nonzero(mask_a | mask_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(mask_a & mask_b) / union


@dataclass(frozen=True)
class TextAnnotation:
    ''' A ground-truth (or predicted) text line '''
    polygon: Polygon
    transcription: str
    ignore: bool

    def __post_init__(self):
        if self.ignore != (self.transcription == DO_NOT_CARE):
            raise GeometryError(f'Ignore flag must be set exactly for "{DO_NOT_CARE}" '
                                f'transcriptions, got "{self.transcription}" '
                                f'with ignore={self.ignore}')

    @classmethod
    def create(cls, polygon: Polygon, transcription: str) -> 'TextAnnotation':
        ''' Create an annotation, deriving the ignore flag from the transcription '''
        return cls(polygon, transcription, transcription == DO_NOT_CARE)

    def scaled(self, factor: float) -> 'TextAnnotation':
        ''' The same annotation with its polygon scaled '''
        return TextAnnotation(self.polygon.scaled(factor), self.transcription, self.ignore)


def parse_annotation_line(line: str, path: str = "<string>", lineno: int = 1) -> TextAnnotation:
    ''' Parse `x1,y1,...,xn,yn<TAB>transcription[<TAB>confidence]` '''
    fields = line.rstrip('\r\n').split('\t')
    if len(fields) > 3:
        raise AnnotationError(path, lineno, f"Expected at most 3 tab-separated fields, "
                                            f"got {len(fields)}")

    coords = fields[0].split(',')
    transcription = fields[1] if len(fields) > 1 else ""

    if len(coords) % 2 != 0:
        raise AnnotationError(path, lineno, f"Odd number of coordinates ({len(coords)})")

    try:
        values = [float(c) for c in coords]
    except ValueError as err:
        raise AnnotationError(path, lineno, f"Invalid coordinate: {err}") from err

    if len(fields) == 3:
        try:
            float(fields[2])
        except ValueError as err:
            raise AnnotationError(path, lineno, f"Invalid confidence: {err}") from err

    try:
        polygon = Polygon(np.array(values).reshape(-1, 2))
    except GeometryError as err:
        raise AnnotationError(path, lineno, str(err)) from err

    return TextAnnotation.create(polygon, transcription)


def read_annotations(path: str) -> list[TextAnnotation]:
    ''' Load all annotations from a file; blank lines are skipped '''
    result = []
    with open(path, encoding='utf-8') as annotation_file:
        for (pos, line) in enumerate(annotation_file, start=1):
            if line.strip() == "":
                continue
            result.append(parse_annotation_line(line, path, pos))
    return result


def format_annotation_line(polygon: Polygon, transcription: str,
                           confidence: Optional[float] = None) -> str:
    ''' Inverse of parse_annotation_line '''
    line = ','.join(f"{v:g}" for v in polygon.to_flat()) + '\t' + transcription
    if confidence is not None:
        line += f"\t{confidence:.4f}"
    return line


def write_annotations(path: str, entries: Iterable[tuple[Polygon, str, Optional[float]]]):
    ''' Store (polygon, transcription, confidence) entries in the annotation format '''
    lines = [format_annotation_line(poly, text, conf) for (poly, text, conf) in entries]
    atomic_write(path, ''.join(f"{line}\n" for line in lines))
