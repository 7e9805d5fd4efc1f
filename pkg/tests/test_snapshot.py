import numpy as np
import pytest

from fnsc.datagen import random_band
from fnsc.grid import FrequencyGrid
from fnsc.snapshot import (
    MAGIC,
    SnapshotError,
    VERSION,
    read_snapshot,
    write_snapshot,
)
from fnsc.symbols import PhysicalParams

PARAMS = PhysicalParams(0.7, 0.8, 3.5)


def roundtrip(tmp_path, field, params=PARAMS, grid=None):
    path = tmp_path / "field.fnsc"
    write_snapshot(path, field, params)
    return read_snapshot(path, grid)


class TestRoundTrip:
    def test_exact_coefficients_and_metadata(self, tmp_path, grid16):
        field = random_band(grid16, 1, 4, seed=9)
        field.time_tag = 2.25
        got, params = roundtrip(tmp_path, field, grid=grid16)
        assert np.array_equal(got.coeffs, field.coeffs)
        assert got.time_tag == 2.25
        assert (params.nu, params.alpha, params.omega) == (0.7, 0.8, 3.5)
        assert got.grid is grid16

    def test_grid_rebuilt_from_header(self, tmp_path):
        grid = FrequencyGrid(8, period=4.0 * np.pi)
        field = random_band(grid, 1, 2, seed=1)
        got, _ = roundtrip(tmp_path, field)
        assert got.grid.n_per_dim == 8
        assert got.grid.period == pytest.approx(4.0 * np.pi)
        assert np.array_equal(got.coeffs, field.coeffs)

    def test_bytes_deterministic(self, tmp_path, grid16):
        field = random_band(grid16, 1, 4, seed=9)
        a, b = tmp_path / "a.fnsc", tmp_path / "b.fnsc"
        write_snapshot(a, field, PARAMS)
        write_snapshot(b, field, PARAMS)
        assert a.read_bytes() == b.read_bytes()


class TestRejection:
    def _write(self, tmp_path, grid):
        path = tmp_path / "field.fnsc"
        write_snapshot(path, random_band(grid, 1, 2, seed=2), PARAMS)
        return path

    def test_truncated_header(self, tmp_path, grid16):
        path = self._write(tmp_path, grid16)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(SnapshotError, match="truncated"):
            read_snapshot(path)

    def test_truncated_payload(self, tmp_path, grid16):
        path = self._write(tmp_path, grid16)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(SnapshotError, match="size mismatch"):
            read_snapshot(path)

    def test_bad_magic(self, tmp_path, grid16):
        path = self._write(tmp_path, grid16)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="magic"):
            read_snapshot(path)

    def test_bad_version(self, tmp_path, grid16):
        path = self._write(tmp_path, grid16)
        blob = bytearray(path.read_bytes())
        blob[4:8] = (VERSION + 1).to_bytes(4, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="version"):
            read_snapshot(path)

    def test_grid_mismatch(self, tmp_path, grid16, grid8):
        path = self._write(tmp_path, grid16)
        with pytest.raises(SnapshotError, match="does not match"):
            read_snapshot(path, grid8)

    def test_magic_is_four_bytes(self):
        assert len(MAGIC) == 4
