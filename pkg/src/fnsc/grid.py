"""Frequency lattice and vector-valued spectral fields on the periodic torus.

The cube [0, L)^3 stands in for all of space: frequency integrals become
quadrature-weighted lattice sums and the Fourier transform is realized by
the FFT with the unitary angular-frequency normalization

    u_hat(xi_k) = (2 pi)^(-3/2) (L/n)^3 * sum_m u(x_m) exp(-i xi_k . x_m)

so that Parseval holds exactly with the lattice volume element
(2 pi / L)^3 and the convolution theorem carries the same weight.
"""

from __future__ import annotations

import numpy as np

_TWO_PI = 2.0 * np.pi


class FrequencyGrid:
    """Discrete Fourier lattice: resolution, period, dealias mask, quadrature.

    Wavenumbers at index (k1, k2, k3) are (2 pi / L) * (kt1, kt2, kt3) with
    kt_i the signed alias of k_i in [-n/2, n/2), in np.fft ordering.
    """

    def __init__(self, n_per_dim, period=_TWO_PI, dealias_fraction=2.0 / 3.0):
        n = int(n_per_dim)
        if n <= 0 or n % 2 != 0:
            raise ValueError("n_per_dim must be a positive even integer")
        if period <= 0:
            raise ValueError("period must be positive")
        if not (0.0 < dealias_fraction <= 1.0):
            raise ValueError("dealias_fraction must lie in (0, 1]")
        self.n_per_dim = n
        self.period = float(period)
        self.dealias_fraction = float(dealias_fraction)
        self.quadrature_weight = (_TWO_PI / self.period) ** 3

        # Signed integer aliases in fft ordering: 0, 1, ..., n/2-1, -n/2, ..., -1.
        alias = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(np.int64)
        self.alias = alias
        scale = _TWO_PI / self.period
        shape = [(n, 1, 1), (1, n, 1), (1, 1, n)]
        self.xi = [scale * alias.reshape(s).astype(np.float64) for s in shape]
        self.xi_mag = np.sqrt(self.xi[0] ** 2 + self.xi[1] ** 2 + self.xi[2] ** 2)
        # The zero mode carries every symbol singularity; guard it once here.
        self.xi_mag_safe = self.xi_mag.copy()
        self.xi_mag_safe[0, 0, 0] = 1.0
        self.nonzero_mask = np.ones((n, n, n), dtype=bool)
        self.nonzero_mask[0, 0, 0] = False

        cutoff = self.dealias_fraction * (n / 2.0)
        amax = np.maximum(
            np.abs(alias.reshape(shape[0])),
            np.maximum(np.abs(alias.reshape(shape[1])), np.abs(alias.reshape(shape[2]))),
        )
        self.dealias_mask = amax <= cutoff
        self._symbol_cache = {}

    def matches(self, other):
        return (
            self.n_per_dim == other.n_per_dim
            and self.period == other.period
        )

    def require_match(self, other):
        if not self.matches(other):
            raise ValueError(
                "grid mismatch: (n=%d, L=%g) vs (n=%d, L=%g)"
                % (self.n_per_dim, self.period, other.n_per_dim, other.period)
            )

    def mesh(self):
        """Physical sample coordinates as three broadcastable arrays."""
        n = self.n_per_dim
        x = np.arange(n) * (self.period / n)
        return x.reshape(n, 1, 1), x.reshape(1, n, 1), x.reshape(1, 1, n)

    @property
    def xi_max(self):
        return float(np.max(self.xi_mag))

    def symbol_cache(self, key, build):
        try:
            return self._symbol_cache[key]
        except KeyError:
            value = build()
            self._symbol_cache[key] = value
            return value

    def __repr__(self):
        return "FrequencyGrid(n_per_dim=%d, period=%g, dealias_fraction=%g)" % (
            self.n_per_dim,
            self.period,
            self.dealias_fraction,
        )


class SpectralField:
    """Three-component complex field on the frequency lattice.

    Fields are immutable values by convention: operations return new
    instances and never write through to shared coefficient arrays.
    """

    __slots__ = ("grid", "coeffs", "time_tag")

    def __init__(self, grid, coeffs, time_tag=0.0, copy=True):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        n = grid.n_per_dim
        if coeffs.shape != (3, n, n, n):
            raise ValueError(
                "coeffs shape %s does not match grid (3, %d, %d, %d)"
                % (coeffs.shape, n, n, n)
            )
        if time_tag < 0:
            raise ValueError("time_tag must be nonnegative")
        self.grid = grid
        self.coeffs = coeffs.copy() if copy else coeffs
        self.time_tag = float(time_tag)

    @classmethod
    def zeros(cls, grid, time_tag=0.0):
        n = grid.n_per_dim
        return cls(grid, np.zeros((3, n, n, n), dtype=np.complex128), time_tag, copy=False)

    def copy(self):
        return SpectralField(self.grid, self.coeffs, self.time_tag, copy=True)

    def with_coeffs(self, coeffs, copy=False):
        return SpectralField(self.grid, coeffs, self.time_tag, copy=copy)

    def project_mean_free(self):
        out = self.coeffs.copy()
        out[:, 0, 0, 0] = 0.0
        return self.with_coeffs(out)

    @property
    def mean_free(self):
        return bool(np.all(self.coeffs[:, 0, 0, 0] == 0.0))

    def magnitude(self):
        """Pointwise Euclidean magnitude over the three components."""
        return np.sqrt(np.abs(self.coeffs[0]) ** 2
                       + np.abs(self.coeffs[1]) ** 2
                       + np.abs(self.coeffs[2]) ** 2)

    def hermitian_residual(self):
        """Max deviation from u_hat(-xi) = conj(u_hat(xi)), absolute."""
        rev = reflect_coeffs(self.coeffs)
        return float(np.max(np.abs(rev.conj() - self.coeffs)))

    def divergence(self):
        """Pointwise i xi . u_hat as a scalar lattice array."""
        g = self.grid
        return 1j * (g.xi[0] * self.coeffs[0]
                     + g.xi[1] * self.coeffs[1]
                     + g.xi[2] * self.coeffs[2])

    def divergence_residual(self):
        """sup |xi . u_hat| normalized by sup |xi| |u_hat|."""
        num = float(np.max(np.abs(self.divergence())))
        den = float(np.max(self.grid.xi_mag * self.magnitude()))
        if den == 0.0:
            return 0.0
        return num / den

    def is_divergence_free(self, tol=1e-12):
        return self.divergence_residual() <= tol

    def energy(self):
        """Quadrature-weighted spectral energy sum."""
        return float(self.grid.quadrature_weight * np.sum(np.abs(self.coeffs) ** 2))

    # Vector-space structure used by the fixed-point engine.
    def _binary(self, other, op):
        if not isinstance(other, SpectralField):
            return NotImplemented
        self.grid.require_match(other.grid)
        return SpectralField(self.grid, op(self.coeffs, other.coeffs),
                             self.time_tag, copy=False)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar, self.time_tag, copy=False)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.time_tag, copy=False)


def reflect_coeffs(coeffs):
    """Index reversal k -> -k (mod n) on the three lattice axes."""
    rev = coeffs[..., ::-1, ::-1, ::-1]
    return np.roll(rev, 1, axis=(-3, -2, -1))


def _forward_scale(grid):
    n = grid.n_per_dim
    return (_TWO_PI) ** (-1.5) * (grid.period / n) ** 3


def forward_transform(physical, grid, mean_free=True, time_tag=0.0):
    """Sampled physical field -> spectral coefficients.

    Scaled so Parseval holds with grid.quadrature_weight.  The zero mode
    is dropped only when mean_free is requested; every solver-facing field
    in this package keeps the mean-free gauge.
    """
    physical = np.asarray(physical, dtype=np.float64)
    n = grid.n_per_dim
    if physical.shape != (3, n, n, n):
        raise ValueError("physical array shape %s does not match grid" % (physical.shape,))
    coeffs = _forward_scale(grid) * np.fft.fftn(physical, axes=(1, 2, 3))
    field = SpectralField(grid, coeffs, time_tag, copy=False)
    if mean_free:
        field = field.project_mean_free()
    return field


def inverse_transform(field, hermitian_tol=1e-10):
    """Spectral coefficients -> physical samples; rejects corrupted fields.

    A real-valued physical field requires u_hat(-xi) = conj(u_hat(xi));
    violations beyond hermitian_tol (relative to the largest coefficient)
    signal a corrupted field rather than roundoff.
    """
    scale = float(np.max(np.abs(field.coeffs)))
    if scale > 0 and field.hermitian_residual() > hermitian_tol * scale:
        raise ValueError("Hermitian symmetry violated; field is not a real signal")
    back = np.fft.ifftn(field.coeffs, axes=(1, 2, 3))
    return np.real(back) / _forward_scale(field.grid)


def forward_scalar(physical, grid):
    """Scalar variant of forward_transform (no gauge projection)."""
    return _forward_scale(grid) * np.fft.fftn(np.asarray(physical))


def inverse_scalar(coeffs, grid):
    """Scalar inverse transform; returns the complex samples unchecked."""
    return np.fft.ifftn(np.asarray(coeffs)) / _forward_scale(grid)


def pointwise_tensor_product(u, v, dealias=True):
    """(u tensor v)-hat via physical products: component (m, k) is u_m v_k.

    Realizes the frequency convolution u_hat_m * v_hat_k with the lattice's
    cyclic wrap.  The 2/3-rule mask is applied afterwards unless the caller
    disables it (exact-identity tests do).
    """
    u.grid.require_match(v.grid)
    g = u.grid
    n = g.n_per_dim
    u_phys = np.fft.ifftn(u.coeffs, axes=(1, 2, 3)) / _forward_scale(g)
    v_phys = np.fft.ifftn(v.coeffs, axes=(1, 2, 3)) / _forward_scale(g)
    tensor = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for m in range(3):
        for k in range(3):
            tensor[m, k] = u_phys[m] * v_phys[k]
    tensor = _forward_scale(g) * np.fft.fftn(tensor, axes=(2, 3, 4))
    if dealias:
        tensor *= g.dealias_mask
    return tensor


def tensor_divergence(tensor, grid):
    """Contraction i xi_m T_{mk}: spectral divergence of a 2-tensor's rows."""
    out = np.empty(tensor.shape[1:], dtype=np.complex128)
    for k in range(3):
        out[k] = 1j * (grid.xi[0] * tensor[0, k]
                       + grid.xi[1] * tensor[1, k]
                       + grid.xi[2] * tensor[2, k])
    return out


def lattice_lp_norm(values, grid, p):
    """Quadrature-weighted lattice L^p norm of a magnitude array."""
    mag = np.abs(values)
    if np.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    return float(grid.quadrature_weight ** (1.0 / p) * np.sum(mag ** p) ** (1.0 / p))
