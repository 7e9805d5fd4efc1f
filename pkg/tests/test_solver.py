import math

import numpy as np
import pytest

from fnsc.datagen import random_band, single_mode
from fnsc.frame import FBParams, fb_norm
from fnsc.grid import SpectralField
from fnsc.nonlinear import bilinear_step
from fnsc.solver import (
    DivergenceError,
    GateError,
    NormSeries,
    SolverConfig,
    evolve,
    picard_solve,
    stability_experiment,
    theorem1_gate,
)
from fnsc.symbols import PhysicalParams, apply_semigroup

import oracles


PARAMS = PhysicalParams(1.0, 0.75, 0.0)
ROTATING = PhysicalParams(1.0, 0.75, 5.0)


class TestSolverConfig:
    def test_rejects_bad_timing(self):
        with pytest.raises(ValueError):
            SolverConfig(PARAMS, dt=0.0, T=1.0)
        with pytest.raises(ValueError):
            SolverConfig(PARAMS, dt=0.5, T=0.4)
        with pytest.raises(ValueError):
            SolverConfig(PARAMS, dt=0.1, T=1.0, record_every=0)

    def test_epsilon_from_K_sits_inside_contraction_window(self):
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0, K=0.25)
        assert cfg.epsilon == pytest.approx(1.0 / 1.5)
        assert 4.0 * cfg.K * cfg.epsilon < 1.0

    def test_rejects_epsilon_outside_window(self):
        with pytest.raises(ValueError):
            SolverConfig(PARAMS, dt=0.1, T=1.0, K=1.0, epsilon=0.3)

    def test_norm_indices(self):
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0)
        assert cfg.velocity_norm().s == pytest.approx(1.0)
        assert cfg.force_norm().s == pytest.approx(-0.5)


class TestPicardScalar:
    def test_quadratic_model_hits_closed_form(self):
        res = picard_solve(0.1, lambda a, b: a * b, K=1.0, tol=1e-14,
                           max_iter=60)
        want = oracles.quadratic_fixed_point(1.0, 0.1)
        assert want == pytest.approx((1.0 - math.sqrt(0.6)) / 2.0)
        assert res.converged
        assert res.iterations <= 60
        assert abs(res.x - want) < 1e-12
        assert res.gate_warning is None

    def test_ball_bound(self):
        res = picard_solve(0.1, lambda a, b: a * b, K=1.0, tol=1e-14)
        assert abs(res.x) <= 2 * 0.1

    def test_continuity_bound_against_roots(self):
        K, eps = 1.0, 0.12
        xa = picard_solve(0.10, lambda a, b: a * b, tol=1e-14).x
        xb = picard_solve(0.11, lambda a, b: a * b, tol=1e-14).x
        oracle_gap = abs(oracles.quadratic_fixed_point(K, 0.10)
                         - oracles.quadratic_fixed_point(K, 0.11))
        bound = 0.01 / (1.0 - 4.0 * K * eps)
        assert abs(abs(xa - xb) - oracle_gap) < 1e-10
        assert abs(xa - xb) <= bound
        assert bound == pytest.approx(0.01 / 0.52)

    def test_gate_violation_is_reported_not_fatal(self):
        # 4*K*y = 1 exactly: outside the contraction window but bounded,
        # so the sweep runs to max_iter instead of blowing up
        res = picard_solve(0.1, lambda a, b: 2.5 * a * b, K=2.5, tol=1e-14,
                           max_iter=50)
        assert res.gate_warning is not None
        assert "4*K*||y||" in res.gate_warning
        assert not res.converged

    def test_blowup_raises(self):
        with pytest.raises(DivergenceError):
            picard_solve(1.0, lambda a, b: 10.0 * a * b)

    def test_history_and_unpacking(self):
        hist = []
        res = picard_solve(0.1, lambda a, b: a * b, tol=1e-13, history=hist)
        x, iters, residual = res
        assert x == res.x and iters == res.iterations
        assert len(hist) == iters
        assert hist[-1] <= 1e-13
        assert hist[0] > hist[-1]

    def test_custom_start_converges_to_same_point(self):
        a = picard_solve(0.1, lambda u, v: u * v, tol=1e-14).x
        b = picard_solve(0.1, lambda u, v: u * v, tol=1e-14, initial=0.0).x
        assert abs(a - b) < 1e-12


class TestPicardField:
    def test_one_window_fixed_point(self, grid8, frame8):
        fb = FBParams.velocity(0.75, 2.0, 2.0)
        y = single_mode(grid8, (1, 0, 0), polarization=(0, 1, 0),
                        amplitude=0.05)
        norm = lambda f: fb_norm(f, fb, frame8)
        res = picard_solve(y, lambda u, v: bilinear_step(u, v, 0.2, ROTATING),
                           tol=1e-12, norm=norm)
        assert res.converged
        assert norm(res.x) <= 2.0 * norm(y)
        drift = res.x - (y + bilinear_step(res.x, res.x, 0.2, ROTATING))
        assert norm(drift) <= 1e-12 * max(1.0, norm(res.x))


class TestNormSeries:
    def test_strictly_increasing_times(self):
        s = NormSeries()
        s.append(0.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            s.append(0.0, 1.0, 0.0, 1.0)

    def test_rows_include_gap_only_when_complete(self):
        s = NormSeries()
        s.append(0.0, 1.0, 0.0, 1.0, gap=0.5)
        s.append(1.0, 0.5, 0.0, 0.5, gap=0.2)
        rows = list(s.rows())
        assert rows[1]["gap_norm"] == 0.2
        t = NormSeries()
        t.append(0.0, 1.0, 0.0, 1.0)
        assert "gap_norm" not in next(t.rows())


class TestEvolve:
    def test_rejects_divergent_initial_data(self, grid16):
        c = np.zeros((3, 16, 16, 16), dtype=np.complex128)
        c[0, 1, 0, 0] = 1.0
        c[0, -1 % 16, 0, 0] = 1.0
        bad = SpectralField(grid16, c, copy=False)
        cfg = SolverConfig(PARAMS, dt=0.1, T=0.5)
        with pytest.raises(ValueError, match="divergence"):
            evolve(bad, None, cfg)

    def test_rejects_mean_carrying_initial_data(self, grid16):
        c = np.zeros((3, 16, 16, 16), dtype=np.complex128)
        c[0, 0, 0, 0] = 1.0
        bad = SpectralField(grid16, c, copy=False)
        cfg = SolverConfig(PARAMS, dt=0.1, T=0.5)
        with pytest.raises(ValueError, match="mean"):
            evolve(bad, None, cfg)

    def test_linear_run_reproduces_semigroup(self, grid16, frame16):
        u0 = random_band(grid16, 1, 3, seed=7, amplitude=0.3)
        cfg = SolverConfig(ROTATING, dt=0.1, T=1.0)
        traj, _ = evolve(u0, None, cfg, frame16, nonlinear=False)
        t_end, u_end = traj[-1]
        want = apply_semigroup(u0, 1.0, ROTATING)
        assert t_end == pytest.approx(1.0)
        assert np.max(np.abs(u_end.coeffs - want.coeffs)) < 1e-12

    def test_recording_schedule(self, grid16, frame16):
        u0 = random_band(grid16, 1, 3, seed=7, amplitude=0.1)
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0, record_every=3)
        traj, norms = evolve(u0, None, cfg, frame16)
        assert norms.times == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
        assert [t for t, _ in traj] == pytest.approx(norms.times)
        assert len(norms.fb_norm_critical) == len(norms.times)
        assert all(d < 1e-10 for d in norms.divergence_residual)
        _, light = evolve(u0, None, cfg, frame16, record_trajectory=False)
        assert light.times == pytest.approx(norms.times)

    def test_small_data_norm_decays(self, grid16, frame16):
        u0 = random_band(grid16, 1, 2, seed=3, amplitude=0.05)
        cfg = SolverConfig(ROTATING, dt=0.05, T=2.0)
        _, norms = evolve(u0, None, cfg, frame16)
        assert norms.fb_norm_critical[-1] < 0.5 * norms.fb_norm_critical[0]

    def test_blowup_detected(self, grid16):
        u0 = random_band(grid16, 1, 3, seed=1, amplitude=2e5)
        cfg = SolverConfig(PhysicalParams(1e-6, 0.75, 0.0), dt=0.1, T=2.0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError):
                evolve(u0, None, cfg)

    def test_step_halving_is_first_order(self, grid16, frame16):
        # ETD1 self-convergence: the solution gap under dt -> dt/2 must
        # shrink by about half at each of three refinements
        u0 = random_band(grid16, 1, 3, seed=11, amplitude=0.5)
        finals = []
        for dt in (0.05, 0.025, 0.0125, 0.00625):
            cfg = SolverConfig(ROTATING, dt=dt, T=0.5, record_every=1000)
            traj, _ = evolve(u0, None, cfg, frame16)
            finals.append(traj[-1][1])
        gaps = [float(np.max(np.abs(a.coeffs - b.coeffs)))
                for a, b in zip(finals, finals[1:])]
        ratios = [a / b for a, b in zip(gaps, gaps[1:])]
        for r in ratios:
            assert 1.6 < r < 2.4


class TestGate:
    def test_requires_epsilon(self, grid16, frame16):
        u0 = random_band(grid16, 1, 2, seed=0, amplitude=0.01)
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0)
        with pytest.raises(ValueError):
            theorem1_gate(u0, None, cfg, frame16)

    def test_small_data_passes_large_fails(self, grid16, frame16):
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0, K=1.0)
        fb = cfg.velocity_norm()
        small = random_band(grid16, 1, 2, seed=0, amplitude=0.01)
        report = theorem1_gate(small, None, cfg, frame16)
        assert report.passed
        assert report.u0_norm == pytest.approx(fb_norm(small, fb, frame16))
        assert report.force_norm == 0.0
        assert report.total == report.u0_norm
        big = random_band(grid16, 1, 2, seed=0, amplitude=10.0)
        assert not theorem1_gate(big, None, cfg, frame16).passed

    def test_force_counted_at_force_index(self, grid16, frame16):
        cfg = SolverConfig(PARAMS, dt=0.1, T=1.0, K=1.0)
        u0 = random_band(grid16, 1, 2, seed=0, amplitude=0.01)
        F = single_mode(grid16, (1, 1, 0), amplitude=0.02)
        report = theorem1_gate(u0, [(0.0, F)], cfg, frame16)
        want = fb_norm(F, cfg.force_norm(), frame16)
        assert report.force_norm == pytest.approx(want)
        assert report.total == pytest.approx(report.u0_norm + want)


class TestStability:
    def _pair(self, grid):
        u0 = random_band(grid, 1, 2, seed=21, amplitude=0.02)
        bump = single_mode(grid, (1, 1, 0), amplitude=0.002)
        return u0, u0 + bump

    def test_equal_forces_gap_decays(self, grid16, frame16):
        u0, v0 = self._pair(grid16)
        cfg = SolverConfig(PARAMS, dt=0.05, T=10.0, K=1.0, record_every=20)
        report = stability_experiment(u0, v0, None, None, cfg, frame16)
        assert report.hypothesis_initial_ok
        assert report.hypothesis_force_ok
        assert report.decay_asserted
        assert report.gap_ratio <= 1e-3
        # the free semigroup gap is the decay mechanism
        assert report.semigroup_gap[-1] <= 1e-3 * report.semigroup_gap[0]

    def test_persistent_force_gap_blocks_the_conclusion(self, grid16, frame16):
        u0, v0 = self._pair(grid16)
        F = [(0.0, single_mode(grid16, (1, 0, 0), polarization=(0, 1, 0),
                               amplitude=0.01))]
        G = [(0.0, single_mode(grid16, (1, 0, 0), polarization=(0, 1, 0),
                               amplitude=0.02))]
        cfg = SolverConfig(PARAMS, dt=0.05, T=10.0, K=1.0, record_every=20)
        report = stability_experiment(u0, v0, F, G, cfg, frame16)
        assert not report.hypothesis_force_ok
        assert not report.decay_asserted
        assert not report.hypothesis_ok

    def test_gate_failure_raises(self, grid16, frame16):
        u0 = random_band(grid16, 1, 2, seed=21, amplitude=5.0)
        cfg = SolverConfig(PARAMS, dt=0.05, T=1.0, K=1.0)
        with pytest.raises(GateError):
            stability_experiment(u0, u0, None, None, cfg, frame16)

    def test_linearized_run_tracks_the_gap(self, grid16, frame16):
        # at these amplitudes the pair gap follows the linear evolution of
        # the initial difference to quadratic accuracy
        u0, v0 = self._pair(grid16)
        cfg = SolverConfig(PARAMS, dt=0.05, T=2.0, K=1.0, record_every=10)
        report = stability_experiment(u0, v0, None, None, cfg, frame16)
        fb = cfg.velocity_norm()
        diff_traj, _ = evolve(v0 - u0, None, cfg, frame16, nonlinear=False,
                              record_trajectory=True)
        lin = {t: f for t, f in diff_traj}
        for t, gap in zip(report.times, report.gap):
            want = fb_norm(lin[t], fb, frame16)
            assert gap == pytest.approx(want, rel=0.15, abs=1e-8)
