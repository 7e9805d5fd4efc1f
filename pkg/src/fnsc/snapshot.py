"""Binary snapshot I/O for spectral velocity/force fields.

Layout (little-endian):
  bytes 0..3    magic "FNSC"
  u32           format version (currently 1)
  u32           n, modes per dimension
  f64 x 5       period, nu, alpha, omega, time_tag
  then 3*n^3 complex128 coefficients, C order (component-major).
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import FrequencyGrid, SpectralField
from .symbols import PhysicalParams

MAGIC = b"FNSC"
VERSION = 1
_HEADER = struct.Struct("<4sII5d")


class SnapshotError(IOError):
    pass


def write_snapshot(path, field: SpectralField, params: PhysicalParams):
    grid = field.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.n_per_dim, grid.period,
                          params.nu, params.alpha, params.omega,
                          field.time_tag)
    payload = np.ascontiguousarray(field.coeffs, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_snapshot(path, grid: FrequencyGrid = None):
    """Returns (field, params).  Pass grid to reuse cached symbol tables."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise SnapshotError("truncated snapshot header: %s" % path)
    magic, version, n, period, nu, alpha, omega, time_tag = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotError("bad magic in %s" % path)
    if version != VERSION:
        raise SnapshotError("unsupported snapshot version %d" % version)
    expected = _HEADER.size + 3 * n ** 3 * 16
    if len(blob) != expected:
        raise SnapshotError("snapshot size mismatch in %s: %d != %d"
                            % (path, len(blob), expected))
    if grid is None:
        grid = FrequencyGrid(n, period)
    elif grid.n_per_dim != n or grid.period != period:
        raise SnapshotError("snapshot grid %dx period %g does not match" % (n, period))
    coeffs = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size)
    coeffs = coeffs.reshape(3, n, n, n).astype(np.complex128)
    params = PhysicalParams(nu=nu, alpha=alpha, omega=omega)
    return SpectralField(grid, coeffs, time_tag=time_tag, copy=False), params
