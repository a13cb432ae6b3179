'''
Seeded synthetic scenes: text polygons with transcriptions, their labels, and
idealized prediction maps that Pixel Aggregation should turn back into the
ground-truth instances.
'''

import os
import string

from dataclasses import dataclass
from typing import Optional

import numpy as np

from scipy import ndimage

from .errors import GeometryError
from .geometry import Polygon, TextAnnotation, raster_mask, write_annotations
from .labelgen import DEFAULT_SHRINK_RATE, LabelSet, generate_labels
from .pa import connected_components
from .tensor import TensorMap, write_ptm

STRIDE = 4
SHAPES = ("rectangle", "quadrilateral", "curved")
WORD_SYMBOLS = string.ascii_lowercase + string.digits

# Text pixels stay at or above 0.75 and background at or below 0.25
TEXT_FLOOR = 0.75
BACKGROUND_CEILING = 0.25

MIN_KERNEL_PIXELS = 5
MIN_REGION_PIXELS = 10
MAX_ATTEMPTS = 200


@dataclass(frozen=True, eq=False)
class Scene:
    ''' One synthetic image with ground truth and idealized predictions '''
    name: str
    annotations: list[TextAnnotation]  # image resolution
    labels: LabelSet                   # map resolution
    p_tex: TensorMap
    p_ker: TensorMap
    emb: TensorMap
    image: TensorMap

    @property
    def map_size(self) -> tuple[int, int]:
        ''' (height, width) at stride 4 '''
        return self.labels.instances.height, self.labels.instances.width

    def write(self, folder: str) -> list[str]:
        ''' Store annotations and maps; returns the paths written '''
        os.makedirs(folder, exist_ok=True)
        paths = [os.path.join(folder, f"{self.name}.txt")]
        write_annotations(paths[0], [(a.polygon, a.transcription, None)
                                     for a in self.annotations])

        for (suffix, tensor) in (("p_tex", self.p_tex), ("p_ker", self.p_ker),
                                 ("emb", self.emb), ("image", self.image)):
            path = os.path.join(folder, f"{self.name}_{suffix}.ptm")
            write_ptm(path, tensor)
            paths.append(path)
        return paths


def random_word(rng: np.random.Generator) -> str:
    ''' A transcription of 3 to 8 letters and digits '''
    length = int(rng.integers(3, 9))
    return "".join(WORD_SYMBOLS[i] for i in rng.integers(0, len(WORD_SYMBOLS), size=length))


def random_polygon(rng: np.random.Generator, kind: str, height: int, width: int) -> Polygon:
    ''' A text-line shaped polygon at map resolution '''
    match kind:
        case "rectangle":
            (w, h) = (int(rng.integers(8, 17)), int(rng.integers(4, 8)))
            (x, y) = (int(rng.integers(0, width - w + 1)), int(rng.integers(0, height - h + 1)))
            return Polygon([(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
        case "quadrilateral":
            (w, h) = (rng.uniform(8, 16), rng.uniform(4, 7))
            shift = rng.uniform(-2.0, 2.0)
            x = rng.uniform(0, width - w)
            y = rng.uniform(max(0.0, -shift), min(height - h, height - h - shift))
            return Polygon([(x, y), (x + w, y + shift), (x + w, y + h + shift), (x, y + h)])
        case "curved":
            length = rng.uniform(12, 18)
            (amplitude, thickness) = (rng.uniform(2.0, 4.0), rng.uniform(4.0, 6.0))
            x0 = rng.uniform(0, width - length)
            y0 = rng.uniform(thickness / 2, height - thickness / 2 - amplitude)
            xs = np.linspace(x0, x0 + length, 6)
            center = y0 + amplitude * np.sin(np.pi * (xs - x0) / length)
            top = np.stack([xs, center - thickness / 2], axis=1)
            bottom = np.stack([xs, center + thickness / 2], axis=1)[::-1]
            return Polygon(np.concatenate([top, bottom]))
        case _:
            raise GeometryError(f"Unknown shape kind: {kind}")


def _usable(region: np.ndarray, kernel: np.ndarray) -> bool:
    ''' One 4-connected region with one 4-connected kernel of useful size '''
    return (region.sum() >= MIN_REGION_PIXELS and kernel.sum() >= MIN_KERNEL_PIXELS
            and connected_components(region).num_instances == 1
            and connected_components(kernel).num_instances == 1)


def instance_vectors(count: int, emb_dim: int, delta_dis: float,
                     rng: np.random.Generator) -> np.ndarray:
    '''
        [count, D] vectors on a random ray, 2·δ_dis apart from each other and
        from the background vector (zero)
    '''
    direction = rng.normal(size=emb_dim)
    direction /= np.linalg.norm(direction)
    return np.stack([2.0 * delta_dis * (index + 1) * direction for index in range(count)])


def idealized_predictions(labels: LabelSet, vectors: np.ndarray,
                          background: Optional[np.ndarray] = None) -> tuple[TensorMap, ...]:
    ''' (p_tex, p_ker, emb) that binarize exactly to the labels at threshold 0.5 '''
    text = labels.g_tex.array[0] > 0.5
    smooth = np.clip(ndimage.gaussian_filter(text.astype(np.float64), sigma=1.0), 0.0, 1.0)
    p_tex = np.where(text, TEXT_FLOOR + (1.0 - TEXT_FLOOR) * smooth, BACKGROUND_CEILING * smooth)

    emb_dim = vectors.shape[1]
    emb = np.zeros((emb_dim,) + text.shape)
    if background is not None:
        emb[:] = background[:, None, None]
    for (index, vector) in enumerate(vectors):
        emb[:, labels.instances.labels == index + 1] = vector[:, None]

    return TensorMap(p_tex[None]), labels.g_ker, TensorMap(emb)


def synthetic_image(labels: LabelSet, rng: np.random.Generator) -> TensorMap:
    ''' A 3-channel image at stride-1 resolution with bright text on a dark background '''
    text = np.kron(labels.g_tex.array[0], np.ones((STRIDE, STRIDE), dtype=np.float32))
    noise = rng.uniform(-0.05, 0.05, size=(3,) + text.shape)
    return TensorMap(0.2 + 0.6 * text[None] + noise)


def make_scene(seed: int, map_height: int = 40, map_width: int = 40, count: int = 3,
               emb_dim: int = 4, delta_dis: float = 3.0, rate: float = DEFAULT_SHRINK_RATE,
               name: Optional[str] = None) -> Scene:
    '''
        Place up to `count` non-touching text polygons of random kinds.

        Every placed instance has a single 4-connected region and kernel, so
        idealized predictions aggregate back into exactly the placed instances.
    '''
    rng = np.random.default_rng(seed)
    occupied = np.zeros((map_height, map_width), dtype=bool)
    placed: list[TextAnnotation] = []

    for _ in range(MAX_ATTEMPTS):
        if len(placed) == count:
            break

        kind = SHAPES[int(rng.integers(0, len(SHAPES)))]
        try:
            polygon = random_polygon(rng, kind, map_height, map_width)
        except GeometryError:
            continue

        region = raster_mask(polygon, map_height, map_width)
        if (region & ndimage.binary_dilation(occupied, iterations=2)).any():
            continue

        single = generate_labels([TextAnnotation.create(polygon, "x")], map_height,
                                 map_width, rate)
        if not _usable(region, single.g_ker.array[0] > 0.5):
            continue

        occupied |= region
        placed.append(TextAnnotation.create(polygon, random_word(rng)))

    labels = generate_labels(placed, map_height, map_width, rate)
    vectors = instance_vectors(len(placed), emb_dim, delta_dis, rng)
    (p_tex, p_ker, emb) = idealized_predictions(labels, vectors)

    return Scene(
        name=name or f"scene{seed}",
        annotations=[annotation.scaled(STRIDE) for annotation in placed],
        labels=labels,
        p_tex=p_tex,
        p_ker=p_ker,
        emb=emb,
        image=synthetic_image(labels, rng),
    )


def make_adjacent_pair(emb_dim: int = 4, delta_dis: float = 3.0, gap: int = 2,
                       bleed: float = 0.6, rate: float = DEFAULT_SHRINK_RATE) -> Scene:
    '''
        Two text boxes `gap` pixels apart, whose text probabilities bleed into
        the gap. Plain region segmentation merges them; the gap pixels carry
        the background vector so aggregation keeps them apart.
    '''
    (height, width) = (24, 40)
    (top, bottom) = (8, 16)
    (left_a, right_a) = (4, 18)
    (left_b, right_b) = (right_a + gap, right_a + gap + 14)

    placed = [
        TextAnnotation.create(Polygon([(left_a, top), (right_a, top), (right_a, bottom),
                                       (left_a, bottom)]), "left"),
        TextAnnotation.create(Polygon([(left_b, top), (right_b, top), (right_b, bottom),
                                       (left_b, bottom)]), "right"),
    ]
    labels = generate_labels(placed, height, width, rate)

    rng = np.random.default_rng(0)
    vectors = instance_vectors(2, emb_dim, delta_dis, rng)
    (p_tex, p_ker, emb) = idealized_predictions(labels, vectors)

    bled = p_tex.array.copy()
    bled[0, top:bottom, right_a:left_b] = bleed

    return Scene(
        name="adjacent",
        annotations=[annotation.scaled(STRIDE) for annotation in placed],
        labels=labels,
        p_tex=TensorMap(bled),
        p_ker=p_ker,
        emb=emb,
        image=synthetic_image(labels, rng),
    )
