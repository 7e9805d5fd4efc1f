"""Time evolution of the mild formulation and the Picard fixed-point engine.

The stepper is first-order exponential time differencing: the semigroup
and its window integral are applied exactly per step, the nonlinearity
and force are frozen at the step's start,

    u_{n+1} = S(dt) u_n + W(dt) P [F(t_n) - i xi . (u_n tensor u_n)-hat],

with W(dt) the exact window integral of the semigroup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .frame import FBParams, LPFrame, build_frame, fb_norm, time_fb_norm
from .grid import SpectralField
from .nonlinear import bilinear_step, sample_series
from .symbols import PhysicalParams, apply_duhamel, apply_leray, apply_semigroup


class GateError(RuntimeError):
    """A smallness hypothesis the requested run relies on does not hold."""


class DivergenceError(RuntimeError):
    """The iteration or trajectory left the finite range (overflow/NaN)."""


@dataclass
class SolverConfig:
    params: PhysicalParams
    dt: float
    T: float
    p: float = 2.0
    q: float = 2.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    K: float | None = None
    epsilon: float | None = None
    record_every: int = 10

    def __post_init__(self):
        if self.dt <= 0 or self.T < self.dt:
            raise ValueError("need dt > 0 and T >= dt")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.K is not None and self.epsilon is None:
            # Strictly inside the 1/(4K) window, with room for the lattice
            # shell-equivalence factor that enters at the scan threshold.
            self.epsilon = 1.0 / (6.0 * self.K)
        if self.K is not None and self.epsilon is not None:
            if not 4.0 * self.K * self.epsilon < 1.0:
                raise ValueError("epsilon must satisfy 4 K epsilon < 1")

    def velocity_norm(self) -> FBParams:
        return FBParams.velocity(self.params.alpha, self.p, self.q)

    def force_norm(self) -> FBParams:
        return FBParams.force(self.params.alpha, self.p, self.q)


@dataclass
class NormSeries:
    """Per-time diagnostics recorded along a trajectory."""

    run_id: str = ""
    times: list = dataclass_field(default_factory=list)
    fb_norm_critical: list = dataclass_field(default_factory=list)
    gap_norm: list = dataclass_field(default_factory=list)
    divergence_residual: list = dataclass_field(default_factory=list)
    energy: list = dataclass_field(default_factory=list)

    def append(self, t, norm, div, energy, gap=None):
        if self.times and t <= self.times[-1]:
            raise ValueError("record times must strictly increase")
        self.times.append(t)
        self.fb_norm_critical.append(norm)
        self.divergence_residual.append(div)
        self.energy.append(energy)
        if gap is not None:
            self.gap_norm.append(gap)

    def rows(self):
        has_gap = len(self.gap_norm) == len(self.times)
        for i, t in enumerate(self.times):
            row = {
                "time": t,
                "fb_norm_critical": self.fb_norm_critical[i],
                "divergence_residual": self.divergence_residual[i],
                "energy": self.energy[i],
            }
            if has_gap:
                row["gap_norm"] = self.gap_norm[i]
            yield row


@dataclass
class PicardResult:
    x: object
    iterations: int
    residual: float
    converged: bool
    gate_warning: str | None = None

    def __iter__(self):
        # unpacks as the documented (fixed point, iterations, residual)
        return iter((self.x, self.iterations, self.residual))


def picard_solve(y, bilinear, K=None, tol=1e-10, max_iter=200, norm=abs,
                 initial=None, history=None) -> PicardResult:
    """Iterate x <- y + B(x, x) from x0 = y (or a supplied start).

    The residual criterion is ||x - y - B(x, x)|| <= tol * max(1, ||x||),
    checked on the iterate that is returned.  Works on any type with +, -
    and a norm functional: scalars and spectral fields alike.  When K is
    given, 4*K*||y|| < 1 is checked up front; a violation is reported as a
    warning on the result but the iteration still runs (it may diverge,
    which max_iter then reports).  Pass a list as history to collect the
    residual after each iteration.
    """
    warning = None
    if K is not None:
        y_norm = norm(y)
        if not 4.0 * K * y_norm < 1.0:
            warning = ("contraction gate violated: 4*K*||y|| = %g >= 1"
                       % (4.0 * K * y_norm))
    x = y if initial is None else initial
    bx = bilinear(x, x)
    residual = math.inf
    for it in range(1, max_iter + 1):
        nxt = y + bx
        bx = bilinear(nxt, nxt)  # reused as B(x,x) of the next sweep
        residual = norm(nxt - (y + bx))
        scale = max(1.0, norm(nxt))
        if history is not None:
            history.append(residual)
        if not math.isfinite(residual) or not math.isfinite(scale):
            raise DivergenceError("fixed-point iterate left the finite range")
        x = nxt
        if residual <= tol * scale:
            return PicardResult(x, it, residual, True, warning)
    return PicardResult(x, max_iter, residual, False, warning)


def _step(u: SpectralField, F_now, dt, params, nonlinear=True) -> SpectralField:
    out = apply_semigroup(u, dt, params)
    if nonlinear:
        out = out + bilinear_step(u, u, dt, params)
    if F_now is not None:
        kick = apply_duhamel(apply_leray(F_now.coeffs, u.grid), dt, params, u.grid)
        out = out + SpectralField(u.grid, kick, copy=False)
    return out


def evolve(u0: SpectralField, F_series, config: SolverConfig, frame: LPFrame = None,
           nonlinear=True, record_trajectory=True):
    """March the mild formulation; returns (trajectory, NormSeries).

    The trajectory holds (time, field) pairs every record_every steps plus
    the initial and final states.  Divergence is re-projected every 100
    steps to stop floating-point drift from accumulating.
    """
    grid = u0.grid
    if frame is None:
        frame = build_frame(grid)
    if not u0.is_divergence_free(1e-8):
        raise ValueError("initial data is not divergence-free")
    if not u0.mean_free:
        raise ValueError("initial data must be mean-free")
    params = config.params
    fb_vel = config.velocity_norm()
    steps = int(round(config.T / config.dt))
    u = u0.copy()
    u.time_tag = 0.0
    trajectory = []
    norms = NormSeries()

    def record(t, state):
        norms.append(t, fb_norm(state, fb_vel, frame),
                     state.divergence_residual(), state.energy())
        if record_trajectory:
            kept = state.copy()
            kept.time_tag = t
            trajectory.append((t, kept))

    record(0.0, u)
    for n in range(steps):
        t_now = n * config.dt
        F_now = sample_series(F_series, t_now) if F_series else None
        u = _step(u, F_now, config.dt, params, nonlinear=nonlinear)
        if not np.all(np.isfinite(u.coeffs.view(np.float64))):
            raise DivergenceError("trajectory blew up at t=%g" % (t_now + config.dt))
        if (n + 1) % 100 == 0:
            u = SpectralField(grid, apply_leray(u.coeffs, grid), copy=False)
        t_next = (n + 1) * config.dt
        if (n + 1) % config.record_every == 0 or n == steps - 1:
            record(t_next, u)
    return trajectory, norms


@dataclass
class GateReport:
    u0_norm: float
    force_norm: float
    epsilon: float
    passed: bool

    @property
    def total(self):
        return self.u0_norm + self.force_norm


def theorem1_gate(u0: SpectralField, F_series, config: SolverConfig,
                  frame: LPFrame = None) -> GateReport:
    """Smallness check ||u0|| + ||F|| < epsilon at the two critical indices."""
    if config.epsilon is None:
        raise ValueError("config.epsilon (or K) must be set for the gate")
    if frame is None:
        frame = build_frame(u0.grid)
    u0_norm = fb_norm(u0, config.velocity_norm(), frame)
    f_norm = 0.0
    if F_series:
        f_norm = time_fb_norm(F_series, config.force_norm(), frame, mode="shell_first")
    total = u0_norm + f_norm
    return GateReport(u0_norm, f_norm, config.epsilon, total < config.epsilon)


def _limit_reached(series_values, drop=1e-2, floor=1e-14):
    """Did the sampled sequence numerically go to zero?"""
    if not series_values:
        return True
    first, last = series_values[0], series_values[-1]
    return last <= floor or (first > 0 and last <= drop * first)


@dataclass
class StabilityReport:
    times: list
    gap: list
    semigroup_gap: list
    force_gap: list
    hypothesis_initial_ok: bool
    hypothesis_force_ok: bool
    decay_asserted: bool
    gate_u: GateReport
    gate_v: GateReport

    @property
    def hypothesis_ok(self):
        return self.hypothesis_initial_ok and self.hypothesis_force_ok

    @property
    def gap_ratio(self):
        if not self.gap or self.gap[0] == 0.0:
            return 0.0
        return self.gap[-1] / self.gap[0]


def stability_experiment(u0, v0, F_series, G_series, config: SolverConfig,
                         frame: LPFrame = None) -> StabilityReport:
    """Run two gated trajectories in lockstep and track their distance.

    The decay conclusion is only asserted when both limit hypotheses hold
    numerically along the run: the free evolution of the data gap and the
    force gap must both tend to zero.
    """
    grid = u0.grid
    if frame is None:
        frame = build_frame(grid)
    gate_u = theorem1_gate(u0, F_series, config, frame)
    gate_v = theorem1_gate(v0, G_series, config, frame)
    if not (gate_u.passed and gate_v.passed):
        raise GateError("both data sets must pass the smallness gate")
    params = config.params
    fb_vel = config.velocity_norm()
    fb_for = config.force_norm()
    steps = int(round(config.T / config.dt))
    u, v = u0.copy(), v0.copy()
    times, gaps, semi_gaps, force_gaps = [], [], [], []
    diff0 = u0 - v0

    def record(t, u_now, v_now):
        times.append(t)
        gaps.append(fb_norm(u_now - v_now, fb_vel, frame))
        semi_gaps.append(fb_norm(apply_semigroup(diff0, t, params), fb_vel, frame))
        fg = 0.0
        if F_series or G_series:
            F_now = sample_series(F_series, t) if F_series else None
            G_now = sample_series(G_series, t) if G_series else None
            if F_now is None and G_now is not None:
                fg = fb_norm(G_now, fb_for, frame)
            elif G_now is None and F_now is not None:
                fg = fb_norm(F_now, fb_for, frame)
            elif F_now is not None and G_now is not None:
                fg = fb_norm(F_now - G_now, fb_for, frame)
        force_gaps.append(fg)

    record(0.0, u, v)
    for n in range(steps):
        t_now = n * config.dt
        F_now = sample_series(F_series, t_now) if F_series else None
        G_now = sample_series(G_series, t_now) if G_series else None
        u = _step(u, F_now, config.dt, params)
        v = _step(v, G_now, config.dt, params)
        bad = not (np.all(np.isfinite(u.coeffs.view(np.float64)))
                   and np.all(np.isfinite(v.coeffs.view(np.float64))))
        if bad:
            raise DivergenceError("stability pair blew up at t=%g" % (t_now + config.dt))
        if (n + 1) % config.record_every == 0 or n == steps - 1:
            record((n + 1) * config.dt, u, v)
    hyp_init = _limit_reached(semi_gaps)
    hyp_force = _limit_reached(force_gaps)
    return StabilityReport(times, gaps, semi_gaps, force_gaps,
                           hyp_init, hyp_force,
                           decay_asserted=hyp_init and hyp_force,
                           gate_u=gate_u, gate_v=gate_v)
