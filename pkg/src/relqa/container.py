"""Versioned single-file container: magic, JSON header, raw little-endian tensors.

Layout::

    magic (6 bytes) | version (uint32 LE) | header length (uint64 LE)
    | UTF-8 JSON header | tensor bytes, contiguous, in directory order

The header carries a ``tensors`` directory of ``{name, shape, dtype, offset}``
entries; offsets are relative to the first tensor byte.  Serialization is
canonical (sorted keys, fixed separators) so equal content gives equal bytes.
"""
import json
import struct

import numpy as np

from relqa.errors import RelqaError

_PREFIX = struct.Struct("<6sIQ")
_DTYPES = {"<f8", "<f4", "<i8", "<i4", "|u1", "|b1"}


class ContainerError(RelqaError):
    pass


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class CorruptHeaderError(ContainerError):
    pass


class TruncatedFileError(ContainerError):
    pass


def _le(arr):
    arr = np.asarray(arr)
    dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder not in ("|", "<") else arr.dtype
    arr = np.ascontiguousarray(arr, dtype=dt)
    if arr.dtype.str not in _DTYPES:
        raise ContainerError(f"unsupported tensor dtype {arr.dtype.str}")
    return arr


def dumps(magic, version, header, tensors):
    """Serialize ``header`` (JSON-able dict) and ``tensors`` (ordered name -> array)."""
    directory, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        arr = _le(arr)
        raw = arr.tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "dtype": arr.dtype.str, "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = dict(header, tensors=directory)
    text = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    head = text.encode("utf-8")
    return _PREFIX.pack(magic, version, len(head)) + head + b"".join(blobs)


def save(path, magic, version, header, tensors):
    data = dumps(magic, version, header, tensors)
    with open(path, "wb") as f:
        f.write(data)


def loads(data, magic, version):
    """Parse container bytes; returns ``(header, tensors)``."""
    if len(data) < _PREFIX.size:
        if data[:len(magic)] != magic[:len(data)]:
            raise BadMagicError(f"not a {magic.decode()} file")
        raise TruncatedFileError(f"file is {len(data)} bytes, shorter than the fixed prefix")
    got_magic, got_version, head_len = _PREFIX.unpack_from(data)
    if got_magic != magic:
        raise BadMagicError(f"bad magic {got_magic!r}, expected {magic!r}")
    if got_version != version:
        raise UnsupportedVersionError(f"format version {got_version} not supported (expected {version})")
    start = _PREFIX.size + head_len
    if start > len(data):
        raise TruncatedFileError(f"header declares {head_len} bytes, only {len(data) - _PREFIX.size} present")
    try:
        header = json.loads(data[_PREFIX.size:start].decode("utf-8"))
        directory = header.pop("tensors")
    except (UnicodeDecodeError, ValueError, KeyError, AttributeError) as exc:
        raise CorruptHeaderError(f"unreadable header: {exc}") from None

    tensors, expected = {}, 0
    for entry in directory:
        try:
            name, shape, dtype, offset = entry["name"], tuple(entry["shape"]), entry["dtype"], entry["offset"]
        except (KeyError, TypeError):
            raise CorruptHeaderError(f"malformed directory entry {entry!r}") from None
        if dtype not in _DTYPES or offset != expected or any(s < 0 for s in shape) or name in tensors:
            raise CorruptHeaderError(f"inconsistent directory entry for {name!r}")
        dt = np.dtype(dtype)
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        lo = start + offset
        if lo + nbytes > len(data):
            raise TruncatedFileError(f"tensor {name!r} needs {nbytes} bytes at offset {offset}; file ends early")
        if nbytes:
            flat = np.frombuffer(data, dtype=dt, count=nbytes // dt.itemsize, offset=lo).copy()
        else:
            flat = np.empty(0, dtype=dt)
        tensors[name] = flat.reshape(shape)
        expected = offset + nbytes
    if start + expected != len(data):
        raise CorruptHeaderError(f"{len(data) - start - expected} trailing bytes after the last tensor")
    return header, tensors


def load(path, magic, version):
    with open(path, "rb") as f:
        return loads(f.read(), magic, version)
