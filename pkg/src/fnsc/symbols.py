"""Frequency-side multipliers of the rotating fractional Stokes operator.

Everything here is a pointwise function of xi: the rotation matrix R(xi),
the Leray projector, the semigroup

    S_hat(t, xi) = exp(-nu |xi|^{2a} t) [cos(b t) I + sin(b t) R(xi)],
    b = Omega xi_3 / |xi|,

its exact window integrals (the step weights of the exponential
integrator), the infinite-time kernel used by the stationary solver, and
the Omega-weighted norm that controls stationary existence at large
rotation.  All symbols vanish at xi = 0 (mean-free gauge).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame import FBParams, LPFrame, _lq_combine, shell_norms
from .grid import SpectralField, lattice_lp_norm

# Below this |z h| the closed form (exp(z h) - 1)/z loses digits to
# cancellation; a five-term Taylor branch keeps both sides near 1e-13.
_TAYLOR_CUTOFF = 1e-2


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity nu, dissipation exponent alpha, Coriolis parameter omega.

    alpha must lie strictly inside (1/2, 5/4); when the Lebesgue index p
    of the working norm is supplied the tighter window
    (1/2, (5 - 3/p)/4) is enforced, since the estimates degenerate at the
    endpoints.
    """

    nu: float
    alpha: float
    omega: float = 0.0
    p: float | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        hi = 1.25 if self.p is None else (5.0 - 3.0 / self.p) / 4.0
        if not (0.5 < self.alpha < hi):
            raise ValueError(
                "alpha=%g outside the admissible open interval (0.5, %g)"
                % (self.alpha, hi)
            )

    def key(self):
        return (self.nu, self.alpha, self.omega)

    def with_omega(self, omega):
        return PhysicalParams(self.nu, self.alpha, float(omega), self.p)


def rotation_matrix(xi):
    """R(xi) with rows ((0, x3, -x2), (-x3, 0, x1), (x2, -x1, 0)) / |xi|.

    Acts as R(xi) v = (v x xi)/|xi|; defined as zero at xi = 0.
    """
    x1, x2, x3 = float(xi[0]), float(xi[1]), float(xi[2])
    mag = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    if mag == 0.0:
        return np.zeros((3, 3))
    return np.array([
        [0.0, x3, -x2],
        [-x3, 0.0, x1],
        [x2, -x1, 0.0],
    ]) / mag


def leray_symbol(xi):
    """P_hat(xi) = I - xi xi^T / |xi|^2; zero matrix at xi = 0."""
    xi = np.asarray(xi, dtype=np.float64)
    mag2 = float(xi @ xi)
    if mag2 == 0.0:
        return np.zeros((3, 3))
    return np.eye(3) - np.outer(xi, xi) / mag2


def semigroup_symbol(xi, t, params: PhysicalParams):
    """The 3x3 semigroup matrix at one frequency; identity-free at xi = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    xi = np.asarray(xi, dtype=np.float64)
    mag = float(np.sqrt(xi @ xi))
    if mag == 0.0:
        return np.zeros((3, 3))
    a = params.nu * mag ** (2.0 * params.alpha)
    b = params.omega * xi[2] / mag
    decay = np.exp(-a * t)
    return decay * (np.cos(b * t) * np.eye(3) + np.sin(b * t) * rotation_matrix(xi))


def _exprel_window(z, h):
    """(exp(z h) - 1)/z elementwise, stable near z h = 0 (-> h there)."""
    w = z * h
    small = np.abs(w) < _TAYLOR_CUTOFF
    safe = np.where(small, 1.0, z)
    with np.errstate(invalid="ignore"):
        out = (np.exp(w) - 1.0) / safe
    ws = w[small]
    out[small] = h * (1.0 + ws / 2.0 + ws ** 2 / 6.0 + ws ** 3 / 24.0 + ws ** 4 / 120.0)
    return out


def duhamel_weights(xi, h, params: PhysicalParams):
    """Exact one-window integral of the semigroup, as a 3x3 matrix.

    integral_0^h exp(-a s) cos(b s) ds * I + integral_0^h exp(-a s) sin(b s) ds * R(xi)
    with a = nu |xi|^{2 alpha}, b = Omega xi_3/|xi|; both scalar integrals
    come from the single complex window (exp((-a+ib) h) - 1)/(-a+ib).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    xi = np.asarray(xi, dtype=np.float64)
    mag = float(np.sqrt(xi @ xi))
    if mag == 0.0:
        return np.zeros((3, 3))
    a = params.nu * mag ** (2.0 * params.alpha)
    b = params.omega * xi[2] / mag
    window = _exprel_window(np.array([complex(-a, b)]), float(h))[0]
    return window.real * np.eye(3) + window.imag * rotation_matrix(xi)


def stationary_kernel(xi, params: PhysicalParams):
    """Closed-form infinite-time integral of the semigroup at one frequency.

    nu |xi|^{2a} / (nu^2 |xi|^{4a} + Omega^2 xi_3^2/|xi|^2) * I
      + (Omega xi_3/|xi|) / (same denominator) * R(xi); zero at xi = 0.
    """
    xi = np.asarray(xi, dtype=np.float64)
    mag = float(np.sqrt(xi @ xi))
    if mag == 0.0:
        return np.zeros((3, 3))
    a = params.nu * mag ** (2.0 * params.alpha)
    b = params.omega * xi[2] / mag
    den = a * a + b * b
    return (a / den) * np.eye(3) + (b / den) * rotation_matrix(xi)


def x_norm_weights(xi, params: PhysicalParams, p):
    """The two weight matrices of the Omega-adapted norm at one frequency.

    w1 = nu |xi|^{6-3/p} / (nu^2 |xi|^{4a+2} + Omega^2 xi_3^2) * I
    w2 = Omega |xi_3| |xi|^{5-2a-3/p} / (same) * R(xi)
    """
    xi = np.asarray(xi, dtype=np.float64)
    mag = float(np.sqrt(xi @ xi))
    if mag == 0.0:
        return np.zeros((3, 3)), np.zeros((3, 3))
    den = params.nu ** 2 * mag ** (4.0 * params.alpha + 2.0) \
        + params.omega ** 2 * xi[2] ** 2
    w1 = params.nu * mag ** (6.0 - 3.0 / p) / den * np.eye(3)
    w2 = abs(params.omega) * abs(xi[2]) * mag ** (5.0 - 2.0 * params.alpha - 3.0 / p) \
        / den * rotation_matrix(xi)
    return w1, w2


# ---------------------------------------------------------------------------
# Grid-wide application.  The scalar pair (a, b) determines every symbol, so
# fields never materialize 3x3 matrices; rotation acts as a cross product.

def _ab_arrays(grid, params: PhysicalParams):
    def build():
        a = params.nu * grid.xi_mag_safe ** (2.0 * params.alpha)
        b = params.omega * np.broadcast_to(grid.xi[2], a.shape) / grid.xi_mag_safe
        return a, np.ascontiguousarray(b)
    return grid.symbol_cache(("ab", params.key()), build)


def apply_rotation(coeffs, grid):
    """Pointwise (v x xi)/|xi| on a 3-component coefficient array."""
    x1, x2, x3 = grid.xi
    inv = 1.0 / grid.xi_mag_safe
    out = np.empty_like(coeffs)
    out[0] = (coeffs[1] * x3 - coeffs[2] * x2) * inv
    out[1] = (coeffs[2] * x1 - coeffs[0] * x3) * inv
    out[2] = (coeffs[0] * x2 - coeffs[1] * x1) * inv
    out[:, 0, 0, 0] = 0.0
    return out


def apply_leray(coeffs, grid):
    """Pointwise v - xi (xi . v)/|xi|^2: projection onto divergence-free."""
    x1, x2, x3 = grid.xi
    dot = coeffs[0] * x1 + coeffs[1] * x2 + coeffs[2] * x3
    dot /= grid.xi_mag_safe ** 2
    out = np.empty_like(coeffs)
    out[0] = coeffs[0] - dot * x1
    out[1] = coeffs[1] - dot * x2
    out[2] = coeffs[2] - dot * x3
    out[:, 0, 0, 0] = 0.0
    return out


def _rotate_combine(coeffs, c_id, c_rot, grid):
    """c_id * v + c_rot * R v, with both coefficient arrays scalar fields."""
    rotated = apply_rotation(coeffs, grid)
    out = c_id * coeffs + c_rot * rotated
    out[:, 0, 0, 0] = 0.0
    return out


def apply_semigroup(field: SpectralField, t, params: PhysicalParams) -> SpectralField:
    """Semigroup action on a whole field; preserves divergence-free fields."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    g = field.grid
    a, b = _ab_arrays(g, params)
    decay = np.exp(-a * t)
    out = _rotate_combine(field.coeffs, decay * np.cos(b * t), decay * np.sin(b * t), g)
    return SpectralField(g, out, field.time_tag, copy=False)


def duhamel_coefficient_arrays(grid, h, params: PhysicalParams):
    """Grid-wide (identity, rotation) coefficients of the window integral."""
    def build():
        a, b = _ab_arrays(grid, params)
        window = _exprel_window(-a + 1j * b, float(h))
        c_id = np.ascontiguousarray(window.real)
        c_rot = np.ascontiguousarray(window.imag)
        c_id[0, 0, 0] = 0.0
        c_rot[0, 0, 0] = 0.0
        return c_id, c_rot
    return grid.symbol_cache(("duhamel", params.key(), float(h)), build)


def apply_duhamel(coeffs, h, params: PhysicalParams, grid):
    c_id, c_rot = duhamel_coefficient_arrays(grid, h, params)
    return _rotate_combine(coeffs, c_id, c_rot, grid)


def stationary_coefficient_arrays(grid, params: PhysicalParams):
    def build():
        a, b = _ab_arrays(grid, params)
        den = a * a + b * b
        c_id = a / den
        c_rot = b / den
        c_id[0, 0, 0] = 0.0
        c_rot[0, 0, 0] = 0.0
        return c_id, c_rot
    return grid.symbol_cache(("stationary", params.key()), build)


def apply_stationary_kernel(coeffs, params: PhysicalParams, grid):
    c_id, c_rot = stationary_coefficient_arrays(grid, params)
    return _rotate_combine(coeffs, c_id, c_rot, grid)


def x_weight_arrays(grid, params: PhysicalParams, p):
    """Scalar prefactors of w1 (identity part) and w2 (rotation part)."""
    def build():
        mag = grid.xi_mag_safe
        den = params.nu ** 2 * mag ** (4.0 * params.alpha + 2.0) \
            + params.omega ** 2 * np.broadcast_to(grid.xi[2], mag.shape) ** 2
        w1 = params.nu * mag ** (6.0 - 3.0 / p) / den
        w2 = abs(params.omega) * np.abs(np.broadcast_to(grid.xi[2], mag.shape)) \
            * mag ** (5.0 - 2.0 * params.alpha - 3.0 / p) / den
        w1 = np.ascontiguousarray(w1)
        w2 = np.ascontiguousarray(w2)
        w1[0, 0, 0] = 0.0
        w2[0, 0, 0] = 0.0
        return w1, w2
    return grid.symbol_cache(("xweights", params.key(), float(p)), build)


def x_norm(field: SpectralField, params: PhysicalParams, fb: FBParams,
           frame: LPFrame, region_mask=None):
    """Sum of the two weighted shell norms defining the Omega-adapted norm.

    Only p and q of fb are used: the regularity weight lives entirely
    inside w1/w2 as |xi| powers, so the shells carry no extra 2^{js}
    factor here.  region_mask, when given, restricts the force to a
    lattice subset before weighting (used by the region-decomposition
    diagnostics).
    """
    g = field.grid
    frame.grid.require_match(g)
    w1, w2 = x_weight_arrays(g, params, fb.p)
    flat = FBParams(0.0, fb.p, fb.q)
    coeffs = field.coeffs
    if region_mask is not None:
        coeffs = coeffs * region_mask
    part1 = SpectralField(g, w1 * coeffs, copy=False)
    part2 = SpectralField(g, w2 * apply_rotation(coeffs, g), copy=False)
    n1 = _lq_combine(shell_norms(part1, flat, frame), fb.q)
    n2 = _lq_combine(shell_norms(part2, flat, frame), fb.q)
    return n1 + n2


def measure_semigroup_constant(fields, times, params: PhysicalParams,
                               fb: FBParams, frame: LPFrame):
    """Empirical sup of ||S(t) u|| / ||u|| over a corpus and a time grid."""
    from .frame import fb_norm
    worst = 0.0
    for u in fields:
        base = fb_norm(u, fb, frame)
        if base == 0.0:
            continue
        for t in times:
            worst = max(worst, fb_norm(apply_semigroup(u, t, params), fb, frame) / base)
    return worst
