# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Readers and writers for matrices.

Three formats are supported:

* PSKM, a single binary matrix: magic ``PSKM``, ``u32`` version (1), ``u8`` dtype
  (0 = f32, 1 = f64), ``u64`` rows, ``u64`` cols, then ``rows * cols`` little-endian values
  in row-major order.
* PSKC, a container of named PSKM blobs: magic ``PSKC``, ``u32`` version (1), ``u64``
  manifest length, the UTF-8 JSON manifest, then the blobs back to back in the order
  given by the manifest's ``blobs`` list.
* CSV with header ``r0,r1,...`` for small matrices.
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from pskt.exceptions import PrecisionError, PSKMParseError
from pskt.matrix import as_matrix, precision_of
from pskt.utils import Precision

PSKM_MAGIC = b"PSKM"
PSKC_MAGIC = b"PSKC"
PSKM_VERSION = 1
PSKC_VERSION = 1

# magic, version, dtype, rows, cols
_PSKM_HEADER = struct.Struct("<4sIBQQ")
# magic, version, manifest length
_PSKC_HEADER = struct.Struct("<4sIQ")
MANIFEST_OFFSET = _PSKC_HEADER.size

_CSV_FORMAT = {Precision.F32: "%.9g", Precision.F64: "%.17g"}


def encode(matrix):
    """Serialize a matrix to PSKM bytes."""
    matrix = as_matrix(matrix)
    precision = precision_of(matrix)
    rows, cols = matrix.shape
    header = _PSKM_HEADER.pack(PSKM_MAGIC, PSKM_VERSION, precision.code, rows, cols)
    payload = np.ascontiguousarray(matrix, dtype=matrix.dtype.newbyteorder("<")).tobytes()
    return header + payload


def decode(buffer, offset=0):
    """Parse one PSKM blob starting at ``offset``.

    Returns
    -------
    (np.ndarray, int)
        The matrix and the offset just past the blob.
    """
    if len(buffer) - offset < _PSKM_HEADER.size:
        raise PSKMParseError(
            f"Truncated PSKM header: need {_PSKM_HEADER.size} bytes, got {len(buffer) - offset}", offset
        )
    magic, version, code, rows, cols = _PSKM_HEADER.unpack_from(buffer, offset)
    if magic != PSKM_MAGIC:
        raise PSKMParseError(f"PSKM blob should start with {PSKM_MAGIC!r}. Got {magic!r}", offset)
    if version != PSKM_VERSION:
        raise PSKMParseError(f"Unsupported PSKM version {version}", offset + 4)
    try:
        precision = Precision.from_code(code)
    except PrecisionError as e:
        raise PSKMParseError(str(e), offset + 8)
    for name, value, field_offset in (("rows", rows, offset + 9), ("cols", cols, offset + 17)):
        if value > np.iinfo(np.intp).max:
            raise PSKMParseError(f"PSKM {name} = {value} exceeds the largest array dimension", field_offset)

    data_offset = offset + _PSKM_HEADER.size
    dtype = np.dtype(precision.dtype).newbyteorder("<")
    count = rows * cols
    end = data_offset + count * dtype.itemsize
    if end > len(buffer):
        raise PSKMParseError(
            f"Truncated PSKM payload: expected {count * dtype.itemsize} bytes for a {rows}x{cols} matrix, "
            f"got {len(buffer) - data_offset}",
            data_offset,
        )

    if count == 0:
        values = np.empty(0, dtype=dtype)
    else:
        values = np.frombuffer(buffer, dtype=dtype, count=count, offset=data_offset)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise PSKMParseError("PSKM payload contains NaN or Inf", data_offset + bad * dtype.itemsize)

    matrix = values.astype(precision.dtype).reshape(rows, cols)
    return matrix, end


def read(filename):
    """Read a PSKM file.

    Arguments
    ---------
    filename : PathLike
        Path to the PSKM file.

    Returns
    -------
    np.ndarray
    """
    buffer = Path(filename).read_bytes()
    matrix, end = decode(buffer)
    if end != len(buffer):
        raise PSKMParseError(f"Unexpected {len(buffer) - end} extra bytes after the PSKM payload", end)
    logging.debug(f"Read {matrix.shape[0]}x{matrix.shape[1]} {matrix.dtype} matrix from {filename}.")
    return matrix


def write(filename, matrix):
    Path(filename).write_bytes(encode(matrix))


def read_csv(filename, precision=Precision.F64):
    """Read a matrix from CSV with an ``r0,r1,...`` header."""
    with open(filename, "r") as file_handler:
        header = file_handler.readline().strip()
        columns = header.split(",") if header else []
        if columns != [f"r{idx}" for idx in range(len(columns))]:
            raise ValueError(f"CSV header of {filename} should be `r0,r1,...`. Got `{header}`.")
        data = np.loadtxt(file_handler, delimiter=",", dtype=np.float64, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(columns))
    if data.shape[1] != len(columns):
        raise ValueError(f"CSV {filename} has {len(columns)} header columns but {data.shape[1]} data columns.")
    return as_matrix(data, precision=precision, check_finite=True)


def write_csv(filename, matrix):
    matrix = as_matrix(matrix)
    header = ",".join(f"r{idx}" for idx in range(matrix.shape[1]))
    np.savetxt(filename, matrix, delimiter=",", header=header, comments="", fmt=_CSV_FORMAT[precision_of(matrix)])


def encode_container(manifest, blobs):
    """Serialize a manifest and named matrices to PSKC bytes.

    ``blobs`` is an ordered mapping of name to matrix. The names are recorded in the
    manifest under ``blobs`` so the reader knows the order. Keys are sorted, so encoding
    the same content twice gives identical bytes.
    """
    manifest = dict(manifest, blobs=list(blobs.keys()))
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PSKC_HEADER.pack(PSKC_MAGIC, PSKC_VERSION, len(manifest_bytes)), manifest_bytes]
    parts.extend(encode(matrix) for matrix in blobs.values())
    return b"".join(parts)


def decode_container(buffer):
    """Parse PSKC bytes into ``(manifest, {name: matrix})``."""
    if len(buffer) < _PSKC_HEADER.size:
        raise PSKMParseError(f"Truncated PSKC header: need {_PSKC_HEADER.size} bytes, got {len(buffer)}", 0)
    magic, version, manifest_length = _PSKC_HEADER.unpack_from(buffer, 0)
    if magic != PSKC_MAGIC:
        raise PSKMParseError(f"Container should start with {PSKC_MAGIC!r}. Got {magic!r}", 0)
    if version != PSKC_VERSION:
        raise PSKMParseError(f"Unsupported PSKC version {version}", 4)

    offset = _PSKC_HEADER.size
    if offset + manifest_length > len(buffer):
        raise PSKMParseError("Truncated PSKC manifest", offset)
    try:
        manifest = json.loads(buffer[offset : offset + manifest_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PSKMParseError(f"Manifest is not valid JSON: {e}", offset)
    names = manifest.get("blobs") if isinstance(manifest, dict) else None
    if not isinstance(names, list):
        raise PSKMParseError("Manifest has no `blobs` list", offset)
    offset += manifest_length

    blobs = {}
    for name in names:
        blobs[name], offset = decode(buffer, offset)
    if offset != len(buffer):
        raise PSKMParseError(f"Unexpected {len(buffer) - offset} extra bytes after the last blob", offset)
    return manifest, blobs


def read_container(filename):
    return decode_container(Path(filename).read_bytes())


def write_container(filename, manifest, blobs):
    Path(filename).write_bytes(encode_container(manifest, blobs))
