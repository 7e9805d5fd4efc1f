"""Deterministic generators for test and experiment fields.

Every generator returns a divergence-free, mean-free, Hermitian-symmetric
SpectralField.  `generate_data` wraps them and rescales so the requested
amplitude *is* the critical Fourier-Besov norm of the output.
"""

from __future__ import annotations

import numpy as np

from .frame import FBParams, LPFrame, build_frame, fb_norm
from .grid import FrequencyGrid, SpectralField, forward_transform, reflect_coeffs
from .symbols import apply_leray

KINDS = ("taylor_green", "random_band", "single_mode", "homogeneous_like")


def taylor_green(grid: FrequencyGrid, amplitude=1.0) -> SpectralField:
    """Classical divergence-free cellular pattern (three active mode pairs)."""
    x, y, z = grid.mesh()
    # rescale coordinates so the pattern tiles any period, not just 2*pi
    s = 2.0 * np.pi / grid.period
    n = grid.n_per_dim
    u = np.stack([
        amplitude * np.sin(s * x) * np.cos(s * y) * np.cos(s * z),
        -amplitude * np.cos(s * x) * np.sin(s * y) * np.cos(s * z),
        np.zeros((n, n, n)),
    ])
    return forward_transform(u, grid)


def _hermitian(coeffs):
    return 0.5 * (coeffs + np.conj(reflect_coeffs(coeffs)))


def _band_mask(grid: FrequencyGrid, k_min, k_max):
    if not 0 < k_min <= k_max:
        raise ValueError("need 0 < k_min <= k_max")
    if k_max > grid.n_per_dim // 2:
        raise ValueError("band exceeds the lattice Nyquist index")
    shape = [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    kk = sum(grid.alias.reshape(s).astype(np.float64) ** 2 for s in shape)
    mag = np.sqrt(kk)
    return (mag >= k_min) & (mag <= k_max)


def _finalize(grid, raw) -> SpectralField:
    # the +n/2 alias folds onto -n/2, so Nyquist-plane content cannot form
    # proper conjugate pairs under the per-site symbols; keep those planes
    # empty like any real-data pseudospectral code
    raw = raw.copy()
    nyq = grid.n_per_dim // 2
    raw[:, nyq, :, :] = 0.0
    raw[:, :, nyq, :] = 0.0
    raw[:, :, :, nyq] = 0.0
    coeffs = apply_leray(_hermitian(raw), grid)
    coeffs[:, 0, 0, 0] = 0.0
    return SpectralField(grid, coeffs, copy=False)


def random_band(grid: FrequencyGrid, k_min=1, k_max=3, seed=0, amplitude=1.0,
                rng=None) -> SpectralField:
    """Gaussian random field supported on integer shells k_min <= |k| <= k_max."""
    if rng is None:
        rng = np.random.default_rng(seed)
    shape = (3, grid.n_per_dim, grid.n_per_dim, grid.n_per_dim)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    raw *= _band_mask(grid, k_min, k_max)
    field = _finalize(grid, raw)
    scale = np.max(field.magnitude())
    if scale > 0:
        field.coeffs *= amplitude / scale
    return field


def single_mode(grid: FrequencyGrid, k=(0, 0, 1), polarization=None,
                amplitude=1.0, phase=0.0) -> SpectralField:
    """One conjugate mode pair at integer wavevector k, polarized across it."""
    k = tuple(int(c) for c in k)
    if k == (0, 0, 0):
        raise ValueError("zero mode carries no velocity")
    half = grid.n_per_dim // 2
    if any(not -half < c < half for c in k):
        raise ValueError("wavevector outside the pairable lattice range")
    xi = np.array(k, dtype=np.float64)
    if polarization is None:
        # any vector not parallel to xi works as a seed for the cross product
        seed_vec = np.array([1.0, 0.0, 0.0])
        if abs(xi[1]) < 1e-14 and abs(xi[2]) < 1e-14:
            seed_vec = np.array([0.0, 1.0, 0.0])
        pol = np.cross(xi, seed_vec)
    else:
        pol = np.asarray(polarization, dtype=np.float64)
        pol = pol - xi * (pol @ xi) / (xi @ xi)
    norm = np.linalg.norm(pol)
    if norm < 1e-14:
        raise ValueError("polarization is parallel to the wavevector")
    pol = pol / norm
    coeffs = np.zeros((3,) + (grid.n_per_dim,) * 3, dtype=np.complex128)
    idx = tuple(c % grid.n_per_dim for c in k)
    neg = tuple((-c) % grid.n_per_dim for c in k)
    value = 0.5 * amplitude * np.exp(1j * phase)
    for c in range(3):
        coeffs[(c,) + idx] = value * pol[c]
        coeffs[(c,) + neg] = np.conj(value * pol[c])
    return SpectralField(grid, coeffs, copy=False)


def homogeneous_like(grid: FrequencyGrid, decay, seed=0, amplitude=1.0,
                     rng=None) -> SpectralField:
    """Random phases under a |xi|^(-decay) magnitude envelope on all modes."""
    if rng is None:
        rng = np.random.default_rng(seed)
    shape = (3, grid.n_per_dim, grid.n_per_dim, grid.n_per_dim)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    envelope = np.where(grid.nonzero_mask, grid.xi_mag_safe ** (-decay), 0.0)
    field = _finalize(grid, raw * envelope)
    scale = np.max(field.magnitude())
    if scale > 0:
        field.coeffs *= amplitude / scale
    return field


def generate_data(kind, grid: FrequencyGrid, seed=0, amplitude=1.0, band=(1, 3),
                  norm_params: FBParams = None, frame: LPFrame = None,
                  **kwargs) -> SpectralField:
    """Build a field of the named kind and set its fb norm to `amplitude`.

    With norm_params given, the output satisfies
    fb_norm(out, norm_params) == amplitude to rounding; otherwise the raw
    generator amplitude is used unchanged.
    """
    if kind == "taylor_green":
        field = taylor_green(grid)
    elif kind == "random_band":
        field = random_band(grid, band[0], band[1], seed=seed, **kwargs)
    elif kind == "single_mode":
        field = single_mode(grid, **kwargs)
    elif kind == "homogeneous_like":
        if "decay" not in kwargs:
            if norm_params is None:
                raise ValueError("homogeneous_like needs decay or norm_params")
            # flat shell profile at the chosen index
            kwargs["decay"] = norm_params.s + 3.0 / norm_params.p
        field = homogeneous_like(grid, seed=seed, **kwargs)
    else:
        raise ValueError("unknown kind %r (choose from %s)" % (kind, ", ".join(KINDS)))
    # each generator above returns a unit-scale field
    if norm_params is not None:
        if frame is None:
            frame = build_frame(grid)
        current = fb_norm(field, norm_params, frame)
        if current == 0.0:
            raise ValueError("degenerate generator output, cannot normalize")
        field.coeffs *= amplitude / current
    else:
        field.coeffs *= amplitude
    return field
