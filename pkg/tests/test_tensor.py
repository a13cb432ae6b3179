'''
Tests for dense tensors, the PTM format, and the tensor primitives
'''

# pylint: disable=missing-function-docstring

import math
import struct

import numpy as np
import pytest

from textspot import TensorError, TensorMap, read_ptm, write_ptm
from textspot.tensor import bilinear_resize, concat_channels, elementwise, ppm_to_tensor
from textspot.tensor import softmax_rows


def _oracle_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    ''' Evaluates the align-corners-false sampling formula pixel by pixel '''
    (channels, height, width) = src.shape
    result = np.zeros((channels, out_h, out_w))

    for c in range(channels):
        for i in range(out_h):
            for j in range(out_w):
                y = min(max((i + 0.5) * height / out_h - 0.5, 0.0), height - 1)
                x = min(max((j + 0.5) * width / out_w - 0.5, 0.0), width - 1)
                (y0, x0) = (int(math.floor(y)), int(math.floor(x)))
                (y1, x1) = (min(y0 + 1, height - 1), min(x0 + 1, width - 1))
                (fy, fx) = (y - y0, x - x0)
                result[c, i, j] = ((1 - fy) * (1 - fx) * src[c, y0, x0]
                                   + (1 - fy) * fx * src[c, y0, x1]
                                   + fy * (1 - fx) * src[c, y1, x0]
                                   + fy * fx * src[c, y1, x1])
    return result


def test_dims_must_match_data():
    with pytest.raises(TensorError):
        TensorMap(np.zeros(5), dims=[2, 3])


def test_zero_dim_rejected():
    with pytest.raises(TensorError):
        TensorMap(np.zeros((0, 3)))


def test_tensor_is_read_only():
    tensor = TensorMap(np.ones((2, 2)))
    with pytest.raises(ValueError):
        tensor.array[0, 0] = 5.0


def test_ptm_layout():
    tensor = TensorMap([[1.0, 2.0, 3.0]])
    payload = tensor.to_bytes()

    assert payload[:4] == b"PTM1"
    assert struct.unpack_from("<3I", payload, 4) == (2, 1, 3)
    assert struct.unpack_from("<3f", payload, 16) == (1.0, 2.0, 3.0)
    assert len(payload) == 4 + 4 * 3 + 4 * 3


def test_ptm_file(tmp_path):
    rng = np.random.default_rng(3)
    tensor = TensorMap(rng.normal(size=(4, 5, 6)))
    path = str(tmp_path / "x.ptm")

    write_ptm(path, tensor)
    assert read_ptm(path) == tensor


def test_ptm_rejects_wrong_magic():
    payload = b"PTM2" + TensorMap([1.0]).to_bytes()[4:]
    with pytest.raises(TensorError):
        TensorMap.from_bytes(payload)


def test_ptm_rejects_rank_zero():
    with pytest.raises(TensorError):
        TensorMap.from_bytes(b"PTM1" + struct.pack("<I", 0))


def test_ptm_rejects_truncated_payload():
    payload = TensorMap(np.ones((3, 3))).to_bytes()
    with pytest.raises(TensorError):
        TensorMap.from_bytes(payload[:-2])


def test_resize_identity_is_bitwise_equal():
    rng = np.random.default_rng(1)
    src = TensorMap(rng.uniform(size=(2, 5, 7)))
    assert bilinear_resize(src, 5, 7) == src


def test_resize_constant():
    src = TensorMap.full([1, 4, 4], 0.37)
    result = bilinear_resize(src, 8, 32)

    assert result.dims == (1, 8, 32)
    assert np.all(result.array == np.float32(0.37))


def test_resize_down_then_up_keeps_constant():
    src = TensorMap.full([2, 12, 20], -1.25)
    result = bilinear_resize(bilinear_resize(src, 5, 3), 12, 20)
    assert result == src


def test_resize_matches_oracle():
    src = np.array([[[0.0, 1.0], [2.0, 3.0]]])
    result = bilinear_resize(TensorMap(src), 4, 4)
    assert np.allclose(result.array, _oracle_resize(src, 4, 4), atol=1e-6)


def test_resize_random_matches_oracle():
    rng = np.random.default_rng(7)
    src = rng.uniform(-2, 2, size=(2, 5, 9))
    result = bilinear_resize(TensorMap(src), 7, 4)

    assert np.allclose(result.array, _oracle_resize(src, 7, 4), atol=1e-5)
    assert result.array.min() >= src.min() - 1e-6
    assert result.array.max() <= src.max() + 1e-6


def test_resize_to_zero_fails():
    with pytest.raises(TensorError):
        bilinear_resize(TensorMap.zeros([1, 2, 2]), 0, 4)


def test_softmax_equal_values():
    result = softmax_rows(TensorMap.full([1, 4], 2.0))
    assert np.allclose(result.array, 0.25)


def test_softmax_hand_example():
    result = softmax_rows(TensorMap([[0.0, math.log(3.0)]]))
    assert np.allclose(result.array, [[0.25, 0.75]], atol=1e-7)


def test_softmax_saturates():
    result = softmax_rows(TensorMap([[50.0, 0.0, 0.0]]))
    assert result.array[0, 0] >= 1.0 - 1e-20


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        x = rng.uniform(-30, 30, size=(3, 6))
        result = softmax_rows(TensorMap(x)).array

        assert np.all(np.abs(result.sum(axis=1) - 1.0) <= 1e-5)
        # order within a row is preserved
        order = np.argsort(x[0])
        assert np.all(np.diff(result[0][order]) >= 0)


def test_elementwise_identities():
    rng = np.random.default_rng(5)
    a = TensorMap(rng.normal(size=(2, 3, 4)))

    assert elementwise(a, TensorMap.zeros(a.dims), "add") == a
    assert elementwise(a, TensorMap.full(a.dims, 1.0), "mul") == a


def test_elementwise_mask():
    a = TensorMap(np.arange(1, 9, dtype=np.float32).reshape(2, 4))
    mask = TensorMap([[1, 0, 1, 0], [0, 1, 0, 1]])
    result = elementwise(a, mask, "mul").array

    assert np.all((result == 0) == (mask.array == 0))


def test_elementwise_commutes():
    rng = np.random.default_rng(6)
    a = TensorMap(rng.normal(size=(3, 3)))
    b = TensorMap(rng.normal(size=(3, 3)))

    for op in ("add", "mul"):
        assert elementwise(a, b, op) == elementwise(b, a, op)


def test_elementwise_dim_mismatch():
    with pytest.raises(TensorError):
        elementwise(TensorMap.zeros([2, 2]), TensorMap.zeros([2, 3]), "add")


def test_concat_channels():
    result = concat_channels([TensorMap.zeros([1, 2, 2]), TensorMap.full([2, 2, 2], 1.0)])
    assert result.dims == (3, 2, 2)
    assert result.array[1:].min() == 1.0

    with pytest.raises(TensorError):
        concat_channels([TensorMap.zeros([1, 2, 2]), TensorMap.zeros([1, 3, 2])])


def test_ppm_to_tensor():
    pixels = bytes([255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 102, 153])
    payload = b"P6\n# a comment\n2 2\n255\n" + pixels
    tensor = ppm_to_tensor(payload)

    assert tensor.dims == (3, 2, 2)
    assert tensor.array[0, 0, 0] == 1.0
    assert tensor.array[1, 0, 1] == 1.0
    assert tensor.array[2, 1, 0] == 1.0
    assert np.allclose(tensor.array[:, 1, 1], [0.2, 0.4, 0.6])


def test_ppm_rejects_other_formats():
    with pytest.raises(TensorError):
        ppm_to_tensor(b"P3\n1 1\n255\n0 0 0\n")

    with pytest.raises(TensorError):
        ppm_to_tensor(b"P6\n2 2\n255\n" + bytes(5))
