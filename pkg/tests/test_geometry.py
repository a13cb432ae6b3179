'''
Tests for polygons, the inward offset, rasterization, and annotation files
'''

# pylint: disable=missing-function-docstring

import pickle

import numpy as np
import pytest

from textspot import AnnotationError, GeometryError, Polygon, TextAnnotation
from textspot import read_annotations, write_annotations
from textspot.geometry import area, perimeter, polygon_iou, rasterize, raster_mask, shrink
from textspot.geometry import parse_annotation_line


def _square(x0, y0, size):
    return Polygon([(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)])


def _inside(vertices, x, y) -> bool:
    ''' Even-odd ray casting '''
    result = False
    count = len(vertices)
    for i in range(count):
        (x1, y1) = vertices[i]
        (x2, y2) = vertices[(i + 1) % count]
        if (y1 > y) != (y2 > y):
            cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < cross:
                result = not result
    return result


def test_degenerate_polygons_rejected():
    with pytest.raises(GeometryError):
        Polygon([(0, 0), (1, 1)])
    with pytest.raises(GeometryError):
        Polygon([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(GeometryError):
        Polygon([(0, 0), (0, 0), (1, 0), (1, 1)])


def test_area():
    assert area(_square(0, 0, 1)) == 1.0
    assert area(_square(0, 0, 100)) == 10000.0
    assert area(Polygon([(0, 0), (4, 0), (0, 3)])) == 6.0


def test_perimeter():
    assert perimeter(_square(0, 0, 1)) == 4.0
    assert perimeter(_square(0, 0, 100)) == 400.0
    assert perimeter(Polygon([(0, 0), (4, 0), (0, 3)])) == 12.0


def test_shrink_zero_margin():
    poly = Polygon([(0, 0), (7, 1), (6, 5), (1, 4)])
    assert np.allclose(shrink(poly, 0.0).vertices, poly.vertices, atol=1e-6)


def test_shrink_square():
    result = shrink(_square(0, 0, 100), 12.75)

    assert result is not None
    (min_x, min_y, max_x, max_y) = result.bounds()
    assert abs(min_x - 12.75) < 1e-3 and abs(min_y - 12.75) < 1e-3
    assert abs(max_x - 87.25) < 1e-3 and abs(max_y - 87.25) < 1e-3
    assert abs(area(result) - 74.5 ** 2) < 0.1


def test_shrink_annihilates():
    assert shrink(_square(0, 0, 10), 6.0) is None


def test_shrink_negative_margin():
    with pytest.raises(GeometryError):
        shrink(_square(0, 0, 10), -1.0)


def test_shrink_is_monotone():
    poly = Polygon([(2, 3), (30, 1), (34, 20), (20, 26), (4, 18)])
    previous = raster_mask(poly, 32, 40)
    for margin in (0.5, 1.5, 3.0, 5.0, 7.0):
        shrunk = shrink(poly, margin)
        current = np.zeros_like(previous) if shrunk is None else raster_mask(shrunk, 32, 40)
        assert not (current & ~previous).any()
        previous = current


def test_shrink_square_area_property():
    for margin in (1.0, 2.5, 4.0):
        result = shrink(_square(2, 2, 20), margin)
        pixels = raster_mask(result, 24, 24).sum()
        expected = (20 - 2 * margin) ** 2
        ring = 4 * (20 - 2 * margin) + 4
        assert abs(pixels - expected) <= ring


def test_rasterize_full_canvas():
    mask = rasterize(_square(-1, -1, 10), 8, 8)
    assert mask.dims == (1, 8, 8)
    assert np.all(mask.array == 1.0)


def test_rasterize_square():
    mask = rasterize(_square(2, 2, 4), 8, 8).array[0]
    assert mask.sum() == 16
    assert np.all(mask[2:6, 2:6] == 1.0)


def test_rasterize_outside():
    mask = rasterize(Polygon([(20, 20), (30, 20), (25, 28)]), 8, 8)
    assert not mask.array.any()


def test_rasterize_matches_oracle():
    rng = np.random.default_rng(9)
    for _ in range(20):
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=6))
        radius = rng.uniform(3, 8, size=6)
        vertices = np.stack([10 + radius * np.cos(angles), 10 + radius * np.sin(angles)], axis=1)
        try:
            poly = Polygon(vertices)
        except GeometryError:
            continue

        mask = raster_mask(poly, 20, 20)
        for row in range(20):
            for col in range(20):
                assert mask[row, col] == _inside(vertices, col + 0.5, row + 0.5)


def test_iou():
    a = _square(0, 0, 10)
    b = Polygon([(0, 5), (10, 5), (10, 15), (0, 15)])

    assert polygon_iou(a, a, 20, 20) == 1.0
    assert polygon_iou(a, _square(12, 12, 5), 20, 20) == 0.0
    assert abs(polygon_iou(a, b, 20, 20) - 50 / 150) < 1e-12
    assert polygon_iou(a, b, 20, 20) == polygon_iou(b, a, 20, 20)


def test_annotation_ignore_flag():
    assert TextAnnotation.create(_square(0, 0, 2), "###").ignore
    assert not TextAnnotation.create(_square(0, 0, 2), "word").ignore

    with pytest.raises(GeometryError):
        TextAnnotation(_square(0, 0, 2), "word", True)


def test_parse_annotation_line():
    annotation = parse_annotation_line("0,0,4,0,4,2,0,2\thello world\n")
    assert annotation.transcription == "hello world"
    assert area(annotation.polygon) == 8.0

    # confidence column of predictions
    annotation = parse_annotation_line("0,0,4,0,4,2\tab\t0.9000")
    assert annotation.transcription == "ab"


def test_malformed_annotation_reports_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0,0,4,0,4,2,0,2\tok\n0,0,4,0\tshort\n", encoding='utf-8')

    with pytest.raises(AnnotationError) as info:
        read_annotations(str(path))

    assert info.value.line == 2
    assert str(info.value).startswith(f"{path}:2:")


def test_annotation_error_pickles():
    err = AnnotationError("bad.txt", 2, "Expected an even number of coordinates")
    copy = pickle.loads(pickle.dumps(err))

    assert (copy.path, copy.line, copy.message) == (err.path, err.line, err.message)
    assert str(copy) == str(err)


def test_annotation_file(tmp_path):
    path = str(tmp_path / "out.txt")
    polys = [_square(1, 1, 3), Polygon([(0, 0), (5, 1), (2, 4)])]
    write_annotations(path, [(polys[0], "abc", None), (polys[1], "###", 0.5)])

    result = read_annotations(path)
    assert [a.transcription for a in result] == ["abc", "###"]
    assert [a.ignore for a in result] == [False, True]
    assert np.allclose(result[1].polygon.vertices, polys[1].vertices)
