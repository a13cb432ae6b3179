''' Dense float32 tensors, the PTM file format, and the primitives everything computes on '''

import struct

from typing import Sequence

import numpy as np

from scipy.special import softmax

from .errors import TensorError
from .util import atomic_write

PTM_MAGIC = b"PTM1"


class TensorMap:
    '''
        A dense row-major array of 32-bit floats with fixed dims.

        The underlying array is read-only; every operation returns a new map.
    '''

    def __init__(self, data, dims: Sequence[int] | None = None):
        array = np.asarray(data, dtype=np.float32)

        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if array.size != int(np.prod(dims)):
                raise TensorError(f"Data length {array.size} does not match "
                                  f"dims {list(dims)}")
            array = array.reshape(dims)

        if array.ndim == 0:
            raise TensorError("Tensors need at least one dimension")
        if any(d < 1 for d in array.shape):
            raise TensorError(f"All dims must be positive, got {list(array.shape)}")

        array = np.array(array, dtype=np.float32, order='C', copy=True)
        array.flags.writeable = False
        self._array = array

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> 'TensorMap':
        ''' Create a tensor filled with zeros '''
        return cls(np.zeros(tuple(dims), dtype=np.float32))

    @classmethod
    def full(cls, dims: Sequence[int], value: float) -> 'TensorMap':
        ''' Create a tensor filled with a constant '''
        return cls(np.full(tuple(dims), value, dtype=np.float32))

    @property
    def dims(self) -> tuple[int, ...]:
        ''' The dimensions of this tensor, e.g. (C, H, W) '''
        return self._array.shape

    @property
    def rank(self) -> int:
        ''' The number of dimensions '''
        return self._array.ndim

    @property
    def array(self) -> np.ndarray:
        ''' Read-only numpy view of the values '''
        return self._array

    @property
    def data(self) -> np.ndarray:
        ''' The values as a flat row-major array '''
        return self._array.reshape(-1)

    def __len__(self):
        return self._array.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TensorMap):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._array, other.array)

    def __repr__(self):
        return f"TensorMap(dims={list(self.dims)})"

    def to_bytes(self) -> bytes:
        ''' Serialize into the PTM binary format '''
        header = PTM_MAGIC + struct.pack(f"<I{self.rank}I", self.rank, *self.dims)
        return header + self._array.astype('<f4').tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes) -> 'TensorMap':
        ''' Parse the PTM binary format '''
        if len(payload) < 8 or payload[:4] != PTM_MAGIC:
            raise TensorError("Not a PTM file (wrong magic bytes)")

        (rank,) = struct.unpack_from("<I", payload, 4)
        if rank == 0:
            raise TensorError("PTM file has rank 0")

        header_len = 8 + 4 * rank
        if len(payload) < header_len:
            raise TensorError("PTM header is truncated")

        dims = struct.unpack_from(f"<{rank}I", payload, 8)
        count = int(np.prod(dims, dtype=np.int64))
        if len(payload) != header_len + 4 * count:
            raise TensorError(f"PTM payload has {len(payload) - header_len} bytes, "
                              f"but dims {list(dims)} need {4 * count}")

        values = np.frombuffer(payload, dtype='<f4', count=count, offset=header_len)
        return cls(values, dims)


def read_ptm(path: str) -> TensorMap:
    ''' Load a tensor from a PTM file '''
    with open(path, 'rb') as ptm_file:
        payload = ptm_file.read()

    try:
        return TensorMap.from_bytes(payload)
    except TensorError as err:
        raise TensorError(f"{path}: {err}") from err


def write_ptm(path: str, tensor: TensorMap):
    ''' Store a tensor as a PTM file '''
    atomic_write(path, tensor.to_bytes())


def _sample_positions(in_size: int, out_size: int):
    # align-corners-false: center of output i maps to (i+0.5)*scale-0.5
    scale = in_size / out_size
    pos = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    pos = np.clip(pos, 0.0, in_size - 1)

    low = np.floor(pos).astype(np.int64)
    high = np.minimum(low + 1, in_size - 1)
    frac = pos - low
    return low, high, frac


def bilinear_resize(src: TensorMap, out_h: int, out_w: int) -> TensorMap:
    ''' Resize a [C,H,W] map to [C,out_h,out_w] with bilinear interpolation '''
    if src.rank != 3:
        raise TensorError(f"bilinear_resize expects [C,H,W], got {list(src.dims)}")
    if out_h < 1 or out_w < 1:
        raise TensorError(f"Cannot resize to {out_h}x{out_w}")

    _, height, width = src.dims
    if (height, width) == (out_h, out_w):
        return src

    y_low, y_high, y_frac = _sample_positions(height, out_h)
    x_low, x_high, x_frac = _sample_positions(width, out_w)

    values = src.array.astype(np.float64)
    top_left = values[:, y_low][:, :, x_low]
    top_right = values[:, y_low][:, :, x_high]
    bottom_left = values[:, y_high][:, :, x_low]
    bottom_right = values[:, y_high][:, :, x_high]

    # Lerp form keeps constant regions exact
    x_frac = x_frac[None, None, :]
    top = top_left + x_frac * (top_right - top_left)
    bottom = bottom_left + x_frac * (bottom_right - bottom_left)
    result = top + y_frac[None, :, None] * (bottom - top)

    return TensorMap(result)


def softmax_rows(x: TensorMap) -> TensorMap:
    ''' Softmax over the last axis of a [R,C] map '''
    if x.rank != 2:
        raise TensorError(f"softmax_rows expects [R,C], got {list(x.dims)}")
    return TensorMap(softmax(x.array.astype(np.float64), axis=1))


def elementwise(a: TensorMap, b: TensorMap, op: str) -> TensorMap:
    ''' Combine two tensors of identical dims element by element '''
    if a.dims != b.dims:
        raise TensorError(f"Dim mismatch: {list(a.dims)} vs {list(b.dims)}")

    match op:
        case "add":
            return TensorMap(a.array + b.array)
        case "mul":
            return TensorMap(a.array * b.array)
        case _:
            raise TensorError(f"Unsupported elementwise operation: {op}")


def concat_channels(maps: Sequence[TensorMap]) -> TensorMap:
    ''' Stack several [C_i,H,W] maps into one [sum(C_i),H,W] map '''
    if len(maps) == 0:
        raise TensorError("Nothing to concatenate")

    spatial = {m.dims[1:] for m in maps}
    if len(spatial) != 1 or any(m.rank != 3 for m in maps):
        raise TensorError(f"Cannot concatenate maps with dims "
                          f"{[list(m.dims) for m in maps]}")

    return TensorMap(np.concatenate([m.array for m in maps], axis=0))


def _ppm_header(payload: bytes) -> tuple[list[int], int]:
    ''' Width, height and maxval of a binary PPM, plus the offset of the pixel data '''
    values: list[int] = []
    pos = 2
    while len(values) < 3:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue

        start = pos
        while pos < len(payload) and payload[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise TensorError("PPM header is truncated or malformed")
        values.append(int(payload[start:pos]))

    # Exactly one whitespace byte separates the header from the pixels
    return values, pos + 1


def ppm_to_tensor(payload: bytes) -> TensorMap:
    ''' Convert a binary (P6) PPM image into a [3,H,W] tensor with values in [0, 1] '''
    if payload[:2] != b"P6":
        raise TensorError("Not a binary PPM (P6) image")

    ((width, height, maxval), offset) = _ppm_header(payload)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise TensorError(f"Invalid PPM header: {width}x{height}, maxval {maxval}")

    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
    count = 3 * width * height
    if len(payload) < offset + count * dtype.itemsize:
        raise TensorError(f"PPM pixel data is truncated: {width}x{height} needs "
                          f"{count * dtype.itemsize} bytes")

    pixels = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
    image = pixels.reshape(height, width, 3).transpose(2, 0, 1).astype(np.float32)
    return TensorMap(image / np.float32(maxval))
