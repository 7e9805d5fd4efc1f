"""End-to-end acceptance battery.

Twelve criteria covering the full pipeline: frame partition, paraproduct
identity, semigroup laws, stationary kernel quadrature, the scalar
fixed-point model, small-data global bounds, perturbation decay,
stationary convergence/uniqueness/equivalence, the rotation-threshold
scan, the bilinear oracle and constant stability, the dyadic scaling law,
and CLI determinism.  Each test prints one PASS/FAIL line (visible with
pytest -s) and fails loudly on any violated bound.
"""

import json
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner

import oracles
from fnsc.calibrate import load_calibration, measure_K
from fnsc.cli import main as cli_main
from fnsc.datagen import random_band, single_mode, taylor_green
from fnsc.experiments import RunManifest, _kernel_quad_entry
from fnsc.frame import FBParams, build_frame, check_scaling, fb_norm
from fnsc.grid import FrequencyGrid, SpectralField
from fnsc.nonlinear import bilinear_step, verify_paraproduct_identity
from fnsc.solver import (SolverConfig, evolve, picard_solve,
                         stability_experiment, theorem1_gate)
from fnsc.stationary import (estimate_omega_threshold, stationary_picard,
                             uniqueness_probe, verify_stationary_equivalence)
from fnsc.symbols import (PhysicalParams, apply_semigroup, rotation_matrix,
                          stationary_kernel, x_norm)

NU, ALPHA = 1.0, 0.75
FB_VEL = FBParams.velocity(ALPHA, 2.0, 2.0)
FB_FOR = FBParams.force(ALPHA, 2.0, 2.0)

_CAL = load_calibration()
K_CAL = _CAL["K"]["frozen"]
EPS = 1.0 / (6.0 * K_CAL)
C_FORCE = _CAL["C_force"]["frozen"]


@pytest.fixture(scope="module")
def grid32():
    return FrequencyGrid(32)


@pytest.fixture(scope="module")
def frame32(grid32):
    return build_frame(grid32)


@pytest.fixture(scope="module")
def grid16():
    return FrequencyGrid(16)


@pytest.fixture(scope="module")
def frame16(grid16):
    return build_frame(grid16)


def report(ordinal, label, ok, detail):
    print("[%2d/12] %-46s %s  (%s)" % (ordinal, label,
                                       "PASS" if ok else "FAIL", detail))
    assert ok, "%s: %s" % (label, detail)


def rescaled(field, fb, frame, target):
    out = field.copy()
    out.coeffs *= target / fb_norm(field, fb, frame)
    return out


def test_partition_of_unity():
    start = time.perf_counter()
    frame = build_frame(FrequencyGrid(32))
    defect = frame.partition_defect()
    elapsed = time.perf_counter() - start
    report(1, "partition of unity", defect <= 1e-12 and elapsed < 1.0,
           "defect %.3e, %.2fs" % (defect, elapsed))


def test_paraproduct_identity_on_seeded_pairs(grid32, frame32):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        f = random_band(grid32, 1, 10, rng=rng)
        g = random_band(grid32, 1, 10, rng=rng)
        worst = max(worst, verify_paraproduct_identity(f.coeffs[0],
                                                       g.coeffs[0], frame32))
    report(2, "paraproduct identity, 20 pairs", worst <= 1e-12,
           "worst residual %.3e" % worst)


def test_semigroup_laws(grid32, frame32):
    params = PhysicalParams(NU, ALPHA, 7.3)
    u = random_band(grid32, 1, 5, seed=31)
    identity_exact = np.array_equal(apply_semigroup(u, 0.0, params).coeffs,
                                    u.coeffs)
    one = apply_semigroup(apply_semigroup(u, 0.3, params), 0.7, params)
    two = apply_semigroup(u, 1.0, params)
    comp = float(np.max(np.abs(one.coeffs - two.coeffs))
                 / np.max(np.abs(two.coeffs)))
    p0 = params.with_omega(0.0)
    heat = apply_semigroup(u, 0.5, p0)
    mult = np.exp(-p0.nu * grid32.xi_mag ** (2 * p0.alpha) * 0.5)
    heat_gap = float(np.max(np.abs(heat.coeffs - mult * u.coeffs)))
    div = apply_semigroup(u, 0.4, params).divergence_residual()
    ok = identity_exact and comp <= 1e-12 and heat_gap <= 1e-14 and div <= 1e-12
    report(3, "semigroup laws", ok,
           "identity=%s comp %.2e heat %.2e div %.2e"
           % (identity_exact, comp, heat_gap, div))


def test_stationary_kernel_matches_quadrature():
    rng = np.random.default_rng(404)
    worst = 0.0
    bound_ok = True
    done = 0
    while done < 10_000:
        nu = rng.uniform(0.25, 4.0)
        alpha = rng.uniform(0.6, 1.2)
        om = 0.0 if rng.random() < 0.25 else rng.uniform(0.0, 100.0)
        xi = rng.uniform(-8.0, 8.0, size=3)
        mag = float(np.linalg.norm(xi))
        if mag < 0.25:
            continue
        done += 1
        kern = stationary_kernel(xi, PhysicalParams(nu, alpha, om))
        a = nu * mag ** (2 * alpha)
        b = om * xi[2] / mag
        cos_part, sin_part = _kernel_quad_entry(a, b)
        ref = cos_part * np.eye(3) + sin_part * rotation_matrix(xi)
        err = float(np.max(np.abs(kern - ref)))
        worst = max(worst, err / (1.0 + float(np.max(np.abs(ref)))))
        cap = mag ** (-2 * alpha) / nu
        if float(np.max(np.abs(kern))) > cap * (1.0 + 1e-12):
            bound_ok = False
    report(4, "stationary kernel vs quadrature",
           worst <= 1e-10 and bound_ok,
           "worst %.3e over 10000 samples, entry bound %s"
           % (worst, "held" if bound_ok else "violated"))


def test_scalar_fixed_point_model():
    res = picard_solve(0.1, lambda a, b: a * b, K=1.0, tol=1e-13, max_iter=60)
    exact = (1.0 - np.sqrt(0.6)) / 2.0
    gap = abs(res.x - exact)
    ball_ok = abs(res.x) <= 2 * 0.1
    xb = picard_solve(0.11, lambda a, b: a * b, K=1.0, tol=1e-13,
                      max_iter=60).x
    oracle_gap = abs(oracles.quadratic_fixed_point(1.0, 0.10)
                     - oracles.quadratic_fixed_point(1.0, 0.11))
    continuity_gap = abs(abs(res.x - xb) - oracle_gap)
    bound = 0.01 / (1.0 - 4.0 * 1.0 * 0.12)  # both data inside the 0.12 ball
    within_bound = abs(res.x - xb) <= bound
    ok = (gap <= 1e-12 and res.iterations <= 60 and ball_ok
          and continuity_gap <= 1e-10 and within_bound)
    report(5, "scalar fixed-point model", ok,
           "|x-exact| %.2e in %d iters, continuity %.2e vs bound %.4f"
           % (gap, res.iterations, continuity_gap, bound))


def test_small_data_global_bound(grid32, frame32):
    params = PhysicalParams(NU, ALPHA, 5.0)
    u0 = rescaled(random_band(grid32, 1, 3, seed=11), FB_VEL, frame32,
                  0.6 * EPS)
    F = rescaled(random_band(grid32, 1, 2, seed=12), FB_FOR, frame32,
                 0.3 * EPS)
    total = fb_norm(u0, FB_VEL, frame32) + fb_norm(F, FB_FOR, frame32)
    assert total == pytest.approx(0.9 * EPS, rel=1e-12)
    # horizon satisfies nu * T * k_min^(2 alpha) >= 10
    config = SolverConfig(params=params, dt=0.05, T=10.0, K=K_CAL,
                          record_every=10)
    assert params.nu * config.T * 1.0 ** (2 * ALPHA) >= 10.0
    assert theorem1_gate(u0, [(0.0, F)], config, frame32).passed
    start = time.perf_counter()
    _, norms = evolve(u0, [(0.0, F)], config, frame32)
    elapsed = time.perf_counter() - start
    peak = max(norms.fb_norm_critical)
    ok = peak <= 2.0 * EPS + 1e-6 and elapsed < 120.0
    report(6, "small-data global bound", ok,
           "peak %.4f vs %.4f over %d records, %.1fs"
           % (peak, 2.0 * EPS + 1e-6, len(norms.times), elapsed))


def test_perturbation_gap_decay_and_hypothesis_flags(grid16, frame16):
    params = PhysicalParams(NU, ALPHA, 5.0)
    config = SolverConfig(params=params, dt=0.05, T=10.0, K=K_CAL,
                          record_every=20)
    u0 = rescaled(random_band(grid16, 1, 3, seed=21), FB_VEL, frame16,
                  0.4 * EPS)
    pert = rescaled(single_mode(grid16, (1, 1, 0)), FB_VEL, frame16,
                    0.02 * EPS)
    F = rescaled(random_band(grid16, 1, 2, seed=22), FB_FOR, frame16,
                 0.05 * EPS)
    same = stability_experiment(u0, u0 + pert, [(0.0, F)], [(0.0, F)],
                                config, frame16)
    decayed = same.gap_ratio <= 1e-3 and same.decay_asserted

    gap_force = rescaled(single_mode(grid16, (0, 1, 1)), FB_FOR, frame16,
                         0.03 * EPS)
    diff = stability_experiment(u0, u0 + pert, [(0.0, F)],
                                [(0.0, F + gap_force)], config, frame16)
    flagged = not diff.hypothesis_force_ok and not diff.decay_asserted
    report(7, "perturbation gap decay", decayed and flagged,
           "equal-force ratio %.2e; persistent gap flagged=%s"
           % (same.gap_ratio, flagged))


def test_stationary_convergence_uniqueness_equivalence(grid32, frame32):
    params = PhysicalParams(NU, ALPHA, 4.0)
    F = single_mode(grid32, (1, 0, 0), polarization=(0.0, 1.0, 0.0)) \
        + single_mode(grid32, (0, 1, 0), polarization=(0.0, 0.0, 1.0),
                      amplitude=0.8)
    F = rescaled(F, FB_FOR, frame32, 0.5 * EPS * params.nu / C_FORCE)
    config = SolverConfig(params=params, dt=0.05, T=1.0, K=K_CAL,
                          picard_tol=1e-13)
    res = stationary_picard(F, params, config, frame32)
    probe = uniqueness_probe(F, params, config, n_starts=8, seed=77,
                             frame=frame32)
    equiv = verify_stationary_equivalence(res.u, F, [0.5, 1.0, 2.0], params,
                                          dt=0.01, q_norm=2.0, frame=frame32,
                                          detail=True)
    equiv_bound = 10.0 * (0.01 + config.picard_tol)
    ok = (res.converged and res.residual <= 1e-10
          and probe.all_converged and probe.spread <= 1e-8
          and max(equiv.values()) <= equiv_bound)
    report(8, "stationary solve / uniqueness / identity", ok,
           "residual %.2e, spread %.2e, identity %.2e vs %.2e"
           % (res.residual, probe.spread, max(equiv.values()), equiv_bound))


def test_rotation_threshold_scan(grid16, frame16):
    params = PhysicalParams(NU, ALPHA, 0.0)
    gate = EPS * params.nu / C_FORCE
    off_axis = single_mode(grid16, (0, 0, 1)) \
        + single_mode(grid16, (1, 0, 1), polarization=(0.0, 1.0, 0.0),
                      amplitude=0.7)
    off_axis = rescaled(off_axis, FB_FOR, frame16, 100.0 * gate)
    scan = estimate_omega_threshold(off_axis, params, 2.0, EPS, q=2.0,
                                    frame=frame16)
    found = (scan.omega_threshold is not None
             and scan.x_norms[scan.threshold_index] <= EPS)
    config = SolverConfig(params=params.with_omega(scan.omega_threshold),
                          dt=0.05, T=1.0, K=K_CAL, picard_tol=1e-13)
    at_threshold = stationary_picard(off_axis, config.params, config, frame16)

    planar = rescaled(single_mode(grid16, (1, 1, 0)), FB_FOR, frame16,
                      100.0 * gate)
    planar_scan = estimate_omega_threshold(planar, params, 2.0, EPS, q=2.0,
                                           frame=frame16)
    planar_ok = (planar_scan.omega_threshold is None
                 and max(planar_scan.x_norms) == min(planar_scan.x_norms))

    # weighted norm never exceeds the viscosity-scaled critical norm
    corpus = [off_axis, planar, taylor_green(grid16),
              random_band(grid16, 1, 5, seed=61),
              random_band(grid16, 2, 6, seed=62)]
    worst_ratio = 0.0
    for om in (0.0, 7.0, 120.0):
        for nu in (1.0, 2.5):
            p_test = PhysicalParams(nu, ALPHA, om)
            for f in corpus:
                ratio = x_norm(f, p_test, FB_FOR, frame16) \
                    / (fb_norm(f, FB_FOR, frame16) / nu)
                worst_ratio = max(worst_ratio, ratio)
    majorized = worst_ratio <= 1.0 + 1e-12

    ok = found and at_threshold.converged and planar_ok and majorized
    report(9, "rotation threshold scan", ok,
           "threshold %s, picard %d iters, planar none=%s, x/(fb/nu) max %.3f"
           % (scan.omega_threshold, at_threshold.iterations, planar_ok,
              worst_ratio))


def test_bilinear_convolution_oracle_and_constant_stability(grid16, frame16):
    grid8 = FrequencyGrid(8)
    u = random_band(grid8, 1, 2, seed=81)
    v = random_band(grid8, 1, 2, seed=82)
    worst = 0.0
    for om in (0.0, 10.0, 100.0):
        params = PhysicalParams(NU, ALPHA, om)
        got = bilinear_step(u, v, 0.1, params)
        want = oracles.bilinear_window_oracle(u, v, 0.1, NU, ALPHA, om)
        worst = max(worst, float(np.max(np.abs(got.coeffs - want))
                                 / np.max(np.abs(want))))

    measured = measure_K(grid16, frame16, NU, ALPHA, 2.0, 2.0, 20240401)
    per_omega = list(measured["per_omega"].values())
    spread = max(per_omega) / min(per_omega) - 1.0
    ok = worst <= 1e-10 and spread <= 0.10
    report(10, "bilinear oracle / constant stability", ok,
           "conv err %.2e, K spread %.2e over Omega {0,10,100}"
           % (worst, spread))


def test_dyadic_scaling_law(grid32, frame32):
    field = random_band(grid32, 1, 5, seed=91)
    worst = 0.0
    for fb in (FB_VEL, FB_FOR):
        for k in (1, 2):
            lhs, rhs = check_scaling(field, k, fb, frame32)
            worst = max(worst, abs(lhs - rhs) / rhs)
    report(11, "dyadic scaling law", worst <= 1e-8,
           "worst relative defect %.3e" % worst)


def test_cli_determinism_and_verify_budget(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("\n".join([
        "[grid]", "n = 16",
        "[solver]", "dt = 0.05", "T = 1.0", "record_every = 5",
        "[experiment]", 'kind = "wellposed"', "seed = 5",
        'force_kind = "single_mode"', "force_mode = [0, 0, 2]",
        "force_epsilon_factor = 0.05",
    ]) + "\n")
    runner = CliRunner()
    outs = []
    for sub in ("a", "b"):
        outdir = str(tmp_path / sub)
        result = runner.invoke(cli_main, ["run", str(config),
                                          "--outdir", outdir])
        assert result.exit_code == 0, result.output
        outs.append(outdir)
    identical = True
    for name in ("norms.csv", "initial.fnsc", "force.fnsc", "summary.txt"):
        with open(os.path.join(outs[0], name), "rb") as fh_a, \
                open(os.path.join(outs[1], name), "rb") as fh_b:
            identical = identical and fh_a.read() == fh_b.read()
    manifests = [RunManifest.load(os.path.join(o, "manifest.json"))
                 for o in outs]
    for m in manifests:
        m.pop("timings")
    identical = identical and manifests[0] == manifests[1]

    start = time.perf_counter()
    verify = runner.invoke(cli_main, ["verify"])
    elapsed = time.perf_counter() - start
    ok = identical and verify.exit_code == 0 and elapsed < 300.0
    report(12, "CLI determinism / verification budget", ok,
           "reruns identical=%s, verify %.1fs" % (identical, elapsed))
