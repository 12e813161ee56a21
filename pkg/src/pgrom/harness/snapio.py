"""Binary snapshot files.

Layout (all fields little-endian)::

    8 bytes   magic "PROMSNAP"
    u32       version (1)
    u8        endianness flag (0 = little)
    u64       state dimension N
    u64       snapshot count m
    f64 * m   time stamps
    f64 * N*m state columns, column after column
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..rom.snapshots import SnapshotSet

__all__ = ["write_snapshots", "read_snapshots", "MAGIC", "VERSION"]

MAGIC = b"PROMSNAP"
VERSION = 1
_HEADER = struct.Struct("<8sIBQQ")


def write_snapshots(path, snapshots):
    times = np.ascontiguousarray(snapshots.times, dtype="<f8")
    states = np.asarray(snapshots.states, dtype="<f8")
    N, m = states.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, 0, N, m))
        fh.write(times.tobytes())
        fh.write(np.asfortranarray(states).tobytes(order="F"))


def read_snapshots(path):
    """Read a snapshot file; any inconsistency raises :class:`FormatError`."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a snapshot header")
    magic, version, endian, N, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if endian != 0:
        raise FormatError(f"{path}: unsupported endianness flag {endian}")
    expected = _HEADER.size + 8 * (m + N * m)
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    off = _HEADER.size
    times = np.frombuffer(data, dtype="<f8", count=m, offset=off).astype(float)
    states = np.frombuffer(data, dtype="<f8", count=N * m, offset=off + 8 * m)
    states = states.reshape((N, m), order="F").astype(float)
    return SnapshotSet(times, states)
