"""Minimal single-file NIfTI-1 reader/writer.

Only what the feature pipeline needs: 3-D volumes stored in ``.nii`` files
(magic ``n+1``) with one of five datatypes. Gzipped files are decompressed
up front by :func:`read_bytes`; the parser itself only sees raw bytes.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagicError, NiftiError, TruncatedDataError, UnsupportedDatatypeError

HEADER_SIZE = 348

DATATYPES = {
    2: np.dtype("u1"),
    4: np.dtype("i2"),
    8: np.dtype("i4"),
    16: np.dtype("f4"),
    64: np.dtype("f8"),
}

# byte offsets inside the 348-byte header
_OFF_DIM = 40
_OFF_DATATYPE = 70
_OFF_BITPIX = 72
_OFF_PIXDIM = 76
_OFF_VOX_OFFSET = 108
_OFF_SCL_SLOPE = 112
_OFF_SCL_INTER = 116
_OFF_MAGIC = 344


@dataclass
class Volume:
    """A 3-D scalar volume.

    ``voxels`` is flat in row-major (C) order over ``dims`` and already has
    the header's intensity scaling applied.
    """

    dims: tuple[int, int, int]
    voxels: np.ndarray
    datatype_code: int = 64
    scale_slope: float = 1.0
    scale_inter: float = 0.0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise NiftiError(f"dims must be 3 positive integers, got {self.dims}")
        self.voxels = np.asarray(self.voxels, dtype=np.float64).ravel()
        if self.voxels.size != self.dims[0] * self.dims[1] * self.dims[2]:
            raise NiftiError(
                f"voxel count {self.voxels.size} does not match dims {self.dims}"
            )

    @property
    def array(self) -> np.ndarray:
        return self.voxels.reshape(self.dims)

    @classmethod
    def from_array(cls, data, datatype_code=64) -> "Volume":
        data = np.asarray(data)
        return cls(dims=data.shape, voxels=data.ravel(), datatype_code=datatype_code)


def read_bytes(path) -> bytes:
    """Read a file, transparently decompressing ``.gz``."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".gz" or raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _endian(raw: bytes) -> str:
    if len(raw) < HEADER_SIZE:
        raise TruncatedDataError(f"header truncated: {len(raw)} < {HEADER_SIZE} bytes")
    for e in ("<", ">"):
        if struct.unpack_from(e + "i", raw, 0)[0] == HEADER_SIZE:
            return e
    raise NiftiError("sizeof_hdr is not 348 in either byte order")


def parse_nifti(raw: bytes) -> Volume:
    e = _endian(raw)
    magic = raw[_OFF_MAGIC:_OFF_MAGIC + 4]
    if magic != b"n+1\x00":
        raise BadMagicError(f"unsupported magic {magic!r}; only single-file 'n+1' is read")

    dim = struct.unpack_from(e + "8h", raw, _OFF_DIM)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise NiftiError(f"invalid dim[0]={ndim}")
    shape = list(dim[1:ndim + 1])
    if any(d <= 0 for d in shape):
        raise NiftiError(f"non-positive dimension in {shape}")
    # trailing singleton axes (e.g. a 4-D file with one frame) are fine
    while len(shape) > 3 and shape[-1] == 1:
        shape.pop()
    if len(shape) > 3:
        raise NiftiError(f"expected a 3-D volume, got shape {tuple(shape)}")
    shape += [1] * (3 - len(shape))

    code = struct.unpack_from(e + "h", raw, _OFF_DATATYPE)[0]
    if code not in DATATYPES:
        raise UnsupportedDatatypeError(f"unsupported datatype code {code}")
    dtype = DATATYPES[code].newbyteorder(e)

    vox_offset = int(struct.unpack_from(e + "f", raw, _OFF_VOX_OFFSET)[0])
    vox_offset = max(vox_offset, HEADER_SIZE)
    slope, inter = struct.unpack_from(e + "2f", raw, _OFF_SCL_SLOPE)
    if slope == 0 or not np.isfinite(slope):
        slope = 1.0
    if not np.isfinite(inter):
        inter = 0.0

    count = shape[0] * shape[1] * shape[2]
    nbytes = count * dtype.itemsize
    if len(raw) < vox_offset + nbytes:
        raise TruncatedDataError(
            f"data section truncated: need {nbytes} bytes at offset {vox_offset}, "
            f"file has {len(raw) - vox_offset}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=vox_offset)
    # on disk the first axis varies fastest
    data = data.reshape(shape, order="F").astype(np.float64)
    if slope != 1.0 or inter != 0.0:
        data = data * float(slope) + float(inter)
    if not np.all(np.isfinite(data)):
        raise NiftiError("volume contains non-finite voxels")
    return Volume(dims=tuple(shape), voxels=data.ravel(), datatype_code=code,
                  scale_slope=float(slope), scale_inter=float(inter))


def load_nifti(path) -> Volume:
    return parse_nifti(read_bytes(path))


def encode_nifti(data, datatype_code=16, slope=0.0, inter=0.0, endian="<",
                 pixdim=(1.0, 1.0, 1.0)) -> bytes:
    """Serialize a 3-D array as a single-file NIfTI-1 image.

    Values are cast to the datatype as-is; scaling fields are only written
    to the header, never applied to ``data``.
    """
    data = np.asarray(data)
    if data.ndim != 3:
        raise NiftiError("encode_nifti expects a 3-D array")
    if datatype_code not in DATATYPES:
        raise UnsupportedDatatypeError(f"unsupported datatype code {datatype_code}")
    dtype = DATATYPES[datatype_code].newbyteorder(endian)

    hdr = bytearray(HEADER_SIZE)
    struct.pack_into(endian + "i", hdr, 0, HEADER_SIZE)
    dim = [3, *data.shape, 1, 1, 1, 1]
    struct.pack_into(endian + "8h", hdr, _OFF_DIM, *dim)
    struct.pack_into(endian + "h", hdr, _OFF_DATATYPE, datatype_code)
    struct.pack_into(endian + "h", hdr, _OFF_BITPIX, dtype.itemsize * 8)
    struct.pack_into(endian + "8f", hdr, _OFF_PIXDIM, 1.0, *pixdim, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into(endian + "f", hdr, _OFF_VOX_OFFSET, 352.0)
    struct.pack_into(endian + "2f", hdr, _OFF_SCL_SLOPE, slope, inter)
    hdr[_OFF_MAGIC:_OFF_MAGIC + 4] = b"n+1\x00"
    body = np.asarray(data, dtype=dtype).tobytes(order="F")
    return bytes(hdr) + b"\x00" * 4 + body


def save_nifti(path, data, datatype_code=16, slope=0.0, inter=0.0, endian="<"):
    Path(path).write_bytes(encode_nifti(data, datatype_code, slope, inter, endian))
