# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from pskt import pskm_io
from pskt.exceptions import PSKMParseError
from pskt.utils import Precision


def test_header_layout():
    data = pskm_io.encode(np.array([[1.0, 2.0, 3.0]], dtype=np.float32))
    assert data[:4] == b"PSKM"
    assert struct.unpack_from("<IBQQ", data, 4) == (1, 0, 1, 3)
    assert len(data) == 25 + 3 * 4
    assert struct.unpack_from("<3f", data, 25) == (1.0, 2.0, 3.0)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_write_read(tmp_path, rng, dtype):
    matrix = rng.standard_normal((7, 3)).astype(dtype)
    filename = tmp_path / "m.pskm"
    pskm_io.write(filename, matrix)
    loaded = pskm_io.read(filename)
    assert loaded.dtype == dtype
    assert_array_equal(loaded, matrix)


def test_empty_matrix(tmp_path):
    filename = tmp_path / "empty.pskm"
    pskm_io.write(filename, np.zeros((0, 4)))
    assert pskm_io.read(filename).shape == (0, 4)


def test_bad_magic():
    data = bytearray(pskm_io.encode(np.eye(2)))
    data[:4] = b"XXXX"
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(bytes(data))
    assert e.value.offset == 0


def test_bad_version_and_dtype():
    data = bytearray(pskm_io.encode(np.eye(2)))
    data[4] = 2
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(bytes(data))
    assert e.value.offset == 4

    data = bytearray(pskm_io.encode(np.eye(2)))
    data[8] = 7
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(bytes(data))
    assert e.value.offset == 8


def test_truncated_payload():
    data = pskm_io.encode(np.eye(3))
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(data[:-1])
    assert e.value.offset == 25
    with pytest.raises(PSKMParseError, match="Truncated PSKM header"):
        pskm_io.decode(data[:10])


@pytest.mark.parametrize("rows, cols, offset", [(2**63, 0, 9), (2**64 - 1, 0, 9), (0, 2**64 - 1, 17)])
def test_oversized_dimensions(rows, cols, offset):
    data = struct.pack("<4sIBQQ", b"PSKM", 1, 1, rows, cols)
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(data)
    assert e.value.offset == offset


def test_non_finite_payload():
    data = bytearray(pskm_io.encode(np.eye(2)))
    struct.pack_into("<d", data, 25 + 3 * 8, np.inf)
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode(bytes(data))
    assert e.value.offset == 25 + 3 * 8


def test_extra_bytes(tmp_path):
    filename = tmp_path / "m.pskm"
    filename.write_bytes(pskm_io.encode(np.eye(2)) + b"\x00")
    with pytest.raises(PSKMParseError, match="extra bytes"):
        pskm_io.read(filename)


def test_csv(tmp_path):
    matrix = np.array([[0.1, -2.5e-300], [1.0 / 3.0, 4.0]])
    filename = tmp_path / "m.csv"
    pskm_io.write_csv(filename, matrix)
    assert filename.read_text().splitlines()[0] == "r0,r1"
    assert_array_equal(pskm_io.read_csv(filename), matrix)

    single = np.array([[1.5, 2.5, 3.5]], dtype=np.float32)
    pskm_io.write_csv(filename, single)
    loaded = pskm_io.read_csv(filename, precision=Precision.F32)
    assert loaded.dtype == np.float32
    assert_array_equal(loaded, single)


def test_csv_bad_header(tmp_path):
    filename = tmp_path / "m.csv"
    filename.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        pskm_io.read_csv(filename)


def test_container(tmp_path):
    blobs = {"b": np.eye(2), "a": np.ones((1, 3), dtype=np.float32)}
    data = pskm_io.encode_container({"kind": "test", "n": 2}, blobs)
    manifest, decoded = pskm_io.decode_container(data)
    assert manifest == {"blobs": ["b", "a"], "kind": "test", "n": 2}
    assert list(decoded) == ["b", "a"]
    assert_array_equal(decoded["b"], np.eye(2))
    assert decoded["a"].dtype == np.float32

    filename = tmp_path / "c.pskc"
    pskm_io.write_container(filename, manifest, decoded)
    assert filename.read_bytes() == data


def test_container_errors():
    data = pskm_io.encode_container({"kind": "test"}, {"m": np.eye(2)})
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode_container(b"PSKX" + data[4:])
    assert e.value.offset == 0
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode_container(data[:-3])
    assert e.value.offset > pskm_io.MANIFEST_OFFSET
    broken = data[: pskm_io.MANIFEST_OFFSET] + b"X" + data[pskm_io.MANIFEST_OFFSET + 1 :]
    with pytest.raises(PSKMParseError) as e:
        pskm_io.decode_container(broken)
    assert e.value.offset == pskm_io.MANIFEST_OFFSET
