"""Shared helpers for the little-endian binary artifacts (SKTS, SKOT, SKDT)."""

import struct

import numpy as np

from src.errors import (
    BadMagicError,
    NonFiniteValuesError,
    TruncatedPayloadError,
    VersionMismatchError,
)

FORMAT_VERSION = 1
FLOAT_DTYPE = np.dtype("<f8")

_PREFIX = struct.Struct("<4sI")


def pack_header(magic, fields_fmt, *fields):
    """
    Build a header: magic, u32 version, then the format-specific fields.

    Args:
        magic (bytes): Four magic bytes.
        fields_fmt (str): struct format (without byte-order prefix) of the
            remaining header fields.
        *fields: Values for ``fields_fmt``.

    Returns:
        bytes: The packed header.
    """
    return _PREFIX.pack(magic, FORMAT_VERSION) + struct.pack("<" + fields_fmt, *fields)


def unpack_header(blob, magic, fields_fmt, path):
    """
    Validate magic and version and unpack the header fields.

    Returns:
        tuple: (fields, offset) where offset is the first payload byte.
    """
    body = struct.Struct("<" + fields_fmt)
    header_size = _PREFIX.size + body.size
    if len(blob) < header_size:
        raise TruncatedPayloadError(
            f"{path}: file holds {len(blob)} bytes, shorter than the {header_size}-byte header"
        )
    found_magic, version = _PREFIX.unpack_from(blob, 0)
    if found_magic != magic:
        raise BadMagicError(f"{path}: expected magic {magic!r}, found {found_magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    return body.unpack_from(blob, _PREFIX.size), header_size


def read_floats(blob, offset, count, path):
    """Read exactly ``count`` float64 values starting at ``offset``."""
    payload = blob[offset:]
    expected = count * FLOAT_DTYPE.itemsize
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: header declares {count} values ({expected} bytes) "
            f"but payload holds {len(payload)} bytes"
        )
    values = np.frombuffer(payload, dtype=FLOAT_DTYPE).astype(np.float64)
    return values


def check_finite(values, path, allow_nan=False):
    bad = ~np.isfinite(values)
    if allow_nan:
        bad &= ~np.isnan(values)
    if bad.any():
        raise NonFiniteValuesError(f"{path}: {int(bad.sum())} non-finite values in payload")


def write_blob(path, header, values):
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(values, dtype=FLOAT_DTYPE).tobytes())
