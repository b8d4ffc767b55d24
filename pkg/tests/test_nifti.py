import gzip
import struct

import numpy as np
import pytest

from armarecon.errors import BadMagicError, TruncatedDataError, UnsupportedDatatypeError
from armarecon.features import extract_cohort_features
from armarecon.nifti import encode_nifti, load_nifti, parse_nifti, save_nifti


def test_float32_slope_zero_is_unscaled(tmp_path):
    data = np.arange(8, dtype=np.float32).reshape(2, 2, 2) / 10
    save_nifti(tmp_path / "a.nii", data, datatype_code=16, slope=0.0, inter=0.0)
    vol = load_nifti(tmp_path / "a.nii")
    assert vol.dims == (2, 2, 2) and vol.datatype_code == 16
    np.testing.assert_array_equal(vol.array, data.astype(np.float64))


def test_int16_slope_scaling(tmp_path):
    data = np.full((1, 1, 2), 500, dtype=np.int16)
    save_nifti(tmp_path / "b.nii", data, datatype_code=4, slope=0.001)
    vol = load_nifti(tmp_path / "b.nii")
    np.testing.assert_allclose(vol.voxels, 0.5, rtol=1e-7)
    assert vol.voxels[0] == 500 * float(np.float32(0.001))


def test_intercept(tmp_path):
    save_nifti(tmp_path / "c.nii", np.ones((2, 1, 1), np.uint8), datatype_code=2, slope=2.0, inter=-1.0)
    np.testing.assert_array_equal(load_nifti(tmp_path / "c.nii").voxels, [1.0, 1.0])


def test_detached_header_magic_rejected():
    raw = bytearray(encode_nifti(np.zeros((1, 1, 1), np.float32)))
    raw[344:348] = b"ni1\x00"
    with pytest.raises(BadMagicError):
        parse_nifti(bytes(raw))


def test_unsupported_datatype():
    raw = bytearray(encode_nifti(np.zeros((1, 1, 1), np.float32)))
    struct.pack_into("<h", raw, 70, 32)  # complex64
    with pytest.raises(UnsupportedDatatypeError):
        parse_nifti(bytes(raw))


def test_truncated_data():
    raw = encode_nifti(np.zeros((4, 4, 4), np.float64), datatype_code=64)
    with pytest.raises(TruncatedDataError):
        parse_nifti(raw[:-8])
    with pytest.raises(TruncatedDataError):
        parse_nifti(raw[:100])


@pytest.mark.parametrize("code", [2, 4, 8, 16, 64])
@pytest.mark.parametrize("endian", ["<", ">"])
def test_round_trip_all_types(rng, code, endian):
    data = rng.integers(0, 100, size=(3, 4, 5))
    raw = encode_nifti(data, datatype_code=code, endian=endian)
    np.testing.assert_array_equal(parse_nifti(raw).array, data.astype(np.float64))


@pytest.mark.parametrize("dtype, code", [(np.float32, 16), (np.float64, 64)])
def test_float_round_trip_bit_exact(rng, dtype, code):
    data = rng.random((5, 3, 4)).astype(dtype)
    vol = parse_nifti(encode_nifti(data, datatype_code=code))
    assert vol.array.astype(dtype).tobytes() == data.tobytes()


def test_axis_order_preserved(tmp_path):
    data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    save_nifti(tmp_path / "d.nii", data)
    vol = load_nifti(tmp_path / "d.nii")
    assert vol.dims == (2, 3, 4)
    assert vol.array[1, 2, 3] == data[1, 2, 3]


def test_nan_rejected():
    data = np.array([[[0.1, np.nan]]], np.float32)
    with pytest.raises(Exception, match="non-finite"):
        parse_nifti(encode_nifti(data))


def test_gzip(tmp_path):
    data = np.ones((2, 2, 2), np.float32) * 0.25
    (tmp_path / "e.nii.gz").write_bytes(gzip.compress(encode_nifti(data)))
    np.testing.assert_array_equal(load_nifti(tmp_path / "e.nii.gz").voxels, 0.25)


def test_cohort_manifest_extraction(tmp_path, rng):
    atlas = rng.integers(0, 3, size=(4, 4, 4)).astype(np.int16)
    save_nifti(tmp_path / "atlas.nii", atlas, datatype_code=4)
    lines = []
    for i in range(4):
        save_nifti(tmp_path / f"fa{i}.nii", rng.random((4, 4, 4)).astype(np.float32))
        lines.append(f"s{i},{i % 2},fa{i}.nii,atlas.nii")
    (tmp_path / "cohort.txt").write_text("# id,label,fa,atlas\n" + "\n".join(lines) + "\n")
    fm = extract_cohort_features(tmp_path / "cohort.txt", [1, 2], q=20)
    assert fm.data.shape == (4, 40)
    assert fm.subject_ids == ["s0", "s1", "s2", "s3"]
    np.testing.assert_allclose(fm.blocks().sum(axis=2), 1.0, atol=1e-12)
