"""Dyadic frequency frame and the norms built on it.

The frame is a smooth partition of unity over dyadic annuli: a bump
phi supported in {3/4 <= |xi| <= 8/3} with sum_j phi(2^-j xi) = 1 for
xi != 0.  The concrete bump uses the classical exp(-1/t) construction,

    theta(t) = exp(-1/t) for t > 0 else 0,
    rho(t)   = theta(t) / (theta(t) + theta(1 - t)),
    chi(r)   = rho((4/3 - r) / (4/3 - 3/4)),
    phi(r)   = chi(r / 2) - chi(r),

so chi == 1 for r <= 3/4 and chi == 0 for r >= 4/3, and the shell sums
telescope exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FrequencyGrid, SpectralField, lattice_lp_norm


def bump_theta(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump_rho(t):
    num = bump_theta(t)
    return num / (num + bump_theta(1.0 - np.asarray(t, dtype=np.float64)))


def bump_chi(r):
    """Smooth cutoff: 1 for r <= 3/4, 0 for r >= 4/3."""
    r = np.asarray(r, dtype=np.float64)
    return bump_rho((4.0 / 3.0 - r) / (4.0 / 3.0 - 3.0 / 4.0))


def bump_phi(r):
    """Annulus bump, supported exactly in [3/4, 8/3]."""
    r = np.asarray(r, dtype=np.float64)
    return bump_chi(r / 2.0) - bump_chi(r)


class LPFrame:
    """Per-shell multipliers phi_j and cumulative low-pass psi_j on a lattice.

    Shell range covers every nonzero lattice frequency:
    j_min = floor(log2(2 pi / L * 3/4)), j_max = ceil(log2(|xi|_max * 4/3)).
    With that range the partition of unity is exact (to roundoff) at every
    nonzero lattice site, since the telescoping tails vanish there.
    """

    def __init__(self, grid: FrequencyGrid):
        self.grid = grid
        kmin = 2.0 * math.pi / grid.period
        self.j_min = math.floor(math.log2(kmin * 3.0 / 4.0))
        self.j_max = math.ceil(math.log2(grid.xi_max * 4.0 / 3.0))
        mag = grid.xi_mag
        self.phi = {}
        for j in range(self.j_min, self.j_max + 1):
            shell = bump_phi(mag * 2.0 ** (-j))
            shell[0, 0, 0] = 0.0
            self.phi[j] = shell
        # psi_j = sum_{k <= j-1} phi_k, clipped to the active range.
        self.psi = {}
        acc = np.zeros_like(mag)
        self.psi[self.j_min] = acc.copy()
        for j in range(self.j_min, self.j_max + 1):
            acc = acc + self.phi[j]
            self.psi[j + 1] = acc.copy()

    def shells(self):
        return range(self.j_min, self.j_max + 1)

    def shell(self, j):
        if j < self.j_min or j > self.j_max:
            raise ValueError("shell %d outside [%d, %d]" % (j, self.j_min, self.j_max))
        return self.phi[j]

    def low_pass(self, j):
        """Multiplier of S_j, i.e. psi_j = sum_{k <= j-1} phi_k."""
        jj = min(max(j, self.j_min), self.j_max + 1)
        return self.psi[jj]

    def partition_defect(self):
        """sup over nonzero lattice sites of |sum_j phi_j - 1|."""
        total = np.zeros_like(self.grid.xi_mag)
        for j in self.shells():
            total += self.phi[j]
        return float(np.max(np.abs(total[self.grid.nonzero_mask] - 1.0)))


def build_frame(grid: FrequencyGrid) -> LPFrame:
    return LPFrame(grid)


@dataclass(frozen=True)
class FBParams:
    """Index triple (s, p, q) of a homogeneous frequency-side Besov norm."""

    s: float
    p: float
    q: float
    critical_velocity: bool = False
    critical_force: bool = False

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not (1 <= self.q or np.isinf(self.q)):
            raise ValueError("q must lie in [1, inf]")

    @classmethod
    def velocity(cls, alpha, p, q):
        """Critical velocity regularity 4 - 2 alpha - 3/p."""
        return cls(4.0 - 2.0 * alpha - 3.0 / p, p, q, critical_velocity=True)

    @classmethod
    def force(cls, alpha, p, q):
        """Critical force regularity 4 - 4 alpha - 3/p."""
        return cls(4.0 - 4.0 * alpha - 3.0 / p, p, q, critical_force=True)

    def check_critical(self, alpha, tol=1e-15):
        if self.critical_velocity:
            return abs(self.s - (4.0 - 2.0 * alpha - 3.0 / self.p)) <= tol
        if self.critical_force:
            return abs(self.s - (4.0 - 4.0 * alpha - 3.0 / self.p)) <= tol
        return True


def _field_magnitude(field):
    if isinstance(field, SpectralField):
        return field.magnitude()
    return np.abs(np.asarray(field))


def shell_norms(field, params: FBParams, frame: LPFrame):
    """Unweighted per-shell L^p norms ||phi_j f_hat||_p, j in frame order."""
    mag = _field_magnitude(field)
    return np.array([
        lattice_lp_norm(frame.phi[j] * mag, frame.grid, params.p)
        for j in frame.shells()
    ])


def _lq_combine(weighted, q):
    if np.isinf(q):
        return float(np.max(weighted)) if weighted.size else 0.0
    return float(np.sum(weighted ** q) ** (1.0 / q))


def fb_norm(field, params: FBParams, frame: LPFrame):
    """Discrete FB^s_{p,q} norm: l^q over shells of 2^{js}-weighted L^p norms."""
    if isinstance(field, SpectralField):
        frame.grid.require_match(field.grid)
    per_shell = shell_norms(field, params, frame)
    js = np.array([float(j) for j in frame.shells()])
    return _lq_combine(2.0 ** (js * params.s) * per_shell, params.q)


def fb_norm_integral(field, params: FBParams, grid: FrequencyGrid):
    """Equivalent p = q form: lattice sum of |xi|^{sp} |f_hat|^p, no shells."""
    if params.p != params.q:
        raise ValueError("integral form applies to p = q only")
    mag = _field_magnitude(field)
    weighted = grid.xi_mag_safe ** params.s * mag
    weighted = np.where(grid.nonzero_mask, weighted, 0.0)
    return lattice_lp_norm(weighted, grid, params.p)


def time_fb_norm(series, params: FBParams, frame: LPFrame, mode="shell_first"):
    """Discrete norm of a sampled path t -> f(t).

    shell_first realizes the l^q-over-shells of sup-in-time form; time_first
    is the plain sup over the sampled times of the static norm.  shell_first
    dominates time_first (Minkowski), which tests rely on.
    """
    if not series:
        raise ValueError("empty time series")
    if mode == "time_first":
        return max(fb_norm(f, params, frame) for _, f in series)
    if mode != "shell_first":
        raise ValueError("mode must be shell_first or time_first")
    per_time = np.stack([shell_norms(f, params, frame) for _, f in series])
    sup_shell = per_time.max(axis=0)
    js = np.array([float(j) for j in frame.shells()])
    return _lq_combine(2.0 ** (js * params.s) * sup_shell, params.q)


def check_bernstein(field, j, beta, p1, p2, frame: LPFrame, constant=1.0, radius=8.0 / 3.0):
    """Report on ||xi^beta f_hat||_{p2} <= C 2^{j|beta| + j(3/p2 - 3/p1)} ||f_hat||_{p1}.

    Requires p2 <= p1 and f supported in the ball |xi| <= radius * 2^j.
    """
    if p2 > p1:
        raise ValueError("requires p2 <= p1")
    grid = frame.grid
    mag = _field_magnitude(field)
    outside = mag[grid.xi_mag > radius * 2.0 ** j]
    top = float(np.max(mag)) if mag.size else 0.0
    if outside.size and top > 0 and float(np.max(outside)) > 1e-13 * top:
        raise ValueError("field support violates the |xi| <= A 2^j ball")
    monomial = (grid.xi[0] ** beta[0]) * (grid.xi[1] ** beta[1]) * (grid.xi[2] ** beta[2])
    lhs = lattice_lp_norm(monomial * mag, grid, p2)
    order = sum(beta) + (3.0 / p2 - 3.0 / p1)
    rhs = constant * 2.0 ** (j * order) * lattice_lp_norm(mag, grid, p1)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio, "constant": constant}


def check_embedding(field, hi: FBParams, lo: FBParams, frame: LPFrame, constant=1.0):
    """Report on ||f||_{s2,p2,r2} <= C ||f||_{s1,p1,r1} for the matched indices.

    hi carries (s1, p1, r1), lo carries (s2, p2, r2); requires p2 <= p1,
    r1 <= r2 and s2 + 3/p2 = s1 + 3/p1.
    """
    if lo.p > hi.p or hi.q > lo.q:
        raise ValueError("requires p2 <= p1 and r1 <= r2")
    if abs((lo.s + 3.0 / lo.p) - (hi.s + 3.0 / hi.p)) > 1e-12:
        raise ValueError("indices must satisfy s2 + 3/p2 = s1 + 3/p1")
    lhs = fb_norm(field, lo, frame)
    rhs = constant * fb_norm(field, hi, frame)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio, "constant": constant}


def dyadic_rescale(field: SpectralField, k: int):
    """Realize f(2^k x) on the nested grid with period L 2^{-k}.

    The physical samples coincide, so the coefficient array is reused with
    the analytic rescaling factor 2^{-3k}; lattice frequencies dilate by
    2^k exactly and the frame shells shift by exactly k.
    """
    g = field.grid
    nested = FrequencyGrid(g.n_per_dim, g.period * 2.0 ** (-k), g.dealias_fraction)
    return SpectralField(nested, field.coeffs * 2.0 ** (-3 * k), field.time_tag)


def check_scaling(field: SpectralField, k: int, params: FBParams, frame: LPFrame):
    """Both sides of ||f(2^k .)|| = 2^{k(s - 3 + 3/p)} ||f|| on nested grids."""
    rescaled = dyadic_rescale(field, k)
    lhs = fb_norm(rescaled, params, build_frame(rescaled.grid))
    rhs = 2.0 ** (k * (params.s - 3.0 + 3.0 / params.p)) * fb_norm(field, params, frame)
    return lhs, rhs
