"""Experiment orchestration: config files, manifests, CSV/snapshot export.

A config is a small TOML file with [grid], [physics], [solver] and
[experiment] sections; unknown keys are rejected so sweeps stay honest.
Every run writes a JSON manifest (opened before compute, finalized after),
the norm series as CSV with full float64 round-trip formatting, binary
snapshots of the relevant fields, and a one-page summary.txt.

Data artifacts (CSV, snapshots, summary) are byte-deterministic for a
fixed config and seed; manifests carry wall-clock timings and are not.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .calibrate import load_calibration
from .datagen import generate_data
from .frame import FBParams, build_frame, fb_norm
from .grid import FrequencyGrid, SpectralField
from .snapshot import read_snapshot, write_snapshot
from .solver import (DivergenceError, GateError, SolverConfig, evolve,
                     stability_experiment, theorem1_gate)
from .stationary import (converge_to_stationary_experiment,
                         estimate_omega_threshold, stationary_picard,
                         uniqueness_probe, verify_stationary_equivalence)
from .symbols import PhysicalParams, x_norm

SCHEMA_VERSION = 1
KINDS = ("wellposed", "stability", "stationary", "converge_to_stationary",
         "omega_scan", "verify_suite")

DEFAULTS = {
    "grid": {
        "n": 32,
        "period": 2.0 * math.pi,
        "dealias_fraction": 2.0 / 3.0,
    },
    "physics": {
        "nu": 1.0,
        "alpha": 0.75,
        "omega": 0.0,
        "p": 2.0,
        "q": 2.0,
    },
    "solver": {
        "dt": 0.05,
        "T": 10.0,
        "picard_tol": 1e-10,
        "picard_max_iter": 200,
        "record_every": 10,
        "K": 0.0,        # 0 -> use the calibrated value
        "epsilon": 0.0,  # 0 -> 1/(6 K)
    },
    "experiment": {
        "kind": "wellposed",
        "seed": 7,
        "outdir": "runs/out",
        "initial_kind": "random_band",
        "initial_snapshot": "",
        "initial_band": [1, 3],
        "initial_epsilon_factor": 0.8,
        "force_kind": "none",
        "force_snapshot": "",
        "force_band": [1, 2],
        "force_epsilon_factor": 0.1,
        "force_gate_factor": 0.0,   # >0: scale force by factor*eps*nu/C instead
        "force_mode": [0, 0, 1],
        "perturbation_kind": "single_mode",
        "perturbation_mode": [0, 0, 1],
        "perturbation_epsilon_factor": 1e-3,
        "force_gap_kind": "none",   # none | pulse | persistent
        "force_gap_epsilon_factor": 0.0,
        "force_gap_until": 1.0,
        "t_samples": [0.5, 1.0, 2.0],
        "equivalence_dt": 0.01,
        "probe_starts": 8,
        "omega_max_power": 20,
        "confirm_picard": True,
        "scan_epsilon": 0.0,        # 0 -> solver epsilon
        "allow_gate_fail": False,
    },
}

_HELP = {
    "grid.n": "modes per dimension (even)",
    "grid.period": "torus period L",
    "grid.dealias_fraction": "kept fraction of Nyquist when dealiasing products",
    "physics.nu": "viscosity",
    "physics.alpha": "dissipation exponent in (1/2, (5-3/p)/4)",
    "physics.omega": "rotation rate",
    "physics.p": "integrability index of the critical norms",
    "physics.q": "summation index of the critical norms",
    "solver.dt": "time step",
    "solver.T": "horizon",
    "solver.picard_tol": "relative fixed-point residual target",
    "solver.picard_max_iter": "fixed-point iteration cap",
    "solver.record_every": "record norms every this many steps",
    "solver.K": "bilinear constant; 0 loads the calibrated value",
    "solver.epsilon": "smallness gate; 0 derives 1/(6K)",
    "experiment.kind": "one of " + " | ".join(KINDS),
    "experiment.seed": "seed for all generated fields",
    "experiment.outdir": "artifact directory (created if missing)",
    "experiment.initial_kind": "u0 generator, or 'snapshot' / 'none'",
    "experiment.initial_snapshot": "path when initial_kind = snapshot",
    "experiment.initial_band": "integer shell band for generated u0",
    "experiment.initial_epsilon_factor": "||u0|| target as a multiple of epsilon",
    "experiment.force_kind": "force generator, or 'snapshot' / 'none'",
    "experiment.force_snapshot": "path when force_kind = snapshot",
    "experiment.force_band": "integer shell band for generated force",
    "experiment.force_epsilon_factor": "||F|| target as a multiple of epsilon",
    "experiment.force_gate_factor": "if > 0, ||F|| = factor * eps*nu/C instead",
    "experiment.force_mode": "wavevector for single_mode force",
    "experiment.perturbation_kind": "generator for the stability perturbation",
    "experiment.perturbation_mode": "wavevector for single_mode perturbation",
    "experiment.perturbation_epsilon_factor": "perturbation size / epsilon",
    "experiment.force_gap_kind": "second force: none=G=F, pulse=transient, persistent",
    "experiment.force_gap_epsilon_factor": "size of the G-F gap / epsilon",
    "experiment.force_gap_until": "pulse end time for force_gap_kind = pulse",
    "experiment.t_samples": "times for the stationarity identity check",
    "experiment.equivalence_dt": "quadrature step of that check",
    "experiment.probe_starts": "uniqueness probe restarts (0 disables)",
    "experiment.omega_max_power": "scan rotation rates 2^0 .. 2^this",
    "experiment.confirm_picard": "run the stationary solve at the threshold",
    "experiment.scan_epsilon": "gate for the scan; 0 uses solver epsilon",
    "experiment.allow_gate_fail": "run past a failed smallness gate (advisory)",
}


def worker_count():
    env = os.environ.get("FNSC_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def config_reference():
    lines = ["# fnsc run configuration reference", "#",
             "# All keys with their defaults; omit any to accept the default."]
    for section, keys in DEFAULTS.items():
        lines.append("")
        lines.append("[%s]" % section)
        for key, value in keys.items():
            hint = _HELP.get("%s.%s" % (section, key), "")
            if isinstance(value, str):
                rendered = '"%s"' % value
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, list):
                rendered = json.dumps(value)
            else:
                rendered = repr(value)
            pad = " " * max(1, 28 - len(key) - len(rendered))
            lines.append("%s = %s%s# %s" % (key, rendered, pad, hint))
    return "\n".join(lines) + "\n"


class ConfigError(ValueError):
    pass


def load_config(path):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    merged = {}
    for section, defaults in DEFAULTS.items():
        got = raw.pop(section, {})
        if not isinstance(got, dict):
            raise ConfigError("[%s] must be a table" % section)
        unknown = set(got) - set(defaults)
        if unknown:
            raise ConfigError("unknown key(s) in [%s]: %s"
                              % (section, ", ".join(sorted(unknown))))
        merged[section] = {**defaults, **got}
    if raw:
        raise ConfigError("unknown section(s): %s" % ", ".join(sorted(raw)))
    kind = merged["experiment"]["kind"]
    if kind not in KINDS:
        raise ConfigError("experiment.kind must be one of %s" % (KINDS,))
    return merged


def run_id_for(config):
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def fmt17(x):
    return "%.17g" % float(x)


def write_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt17(row[c]) for c in columns) + "\n")


class RunManifest:
    def __init__(self, run_id, kind, config):
        self.data = {
            "schema_version": SCHEMA_VERSION,
            "run_id": run_id,
            "kind": kind,
            "status": "running",
            "config": config,
            "gates": {},
            "constants": {},
            "outputs": [],
            "timings": {},
            "results": {},
        }

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path):
        with open(path) as fh:
            return json.load(fh)


def _gate_dict(report):
    return {
        "u0_norm": report.u0_norm,
        "force_norm": report.force_norm,
        "epsilon": report.epsilon,
        "passed": bool(report.passed),
    }


def _build_solver_config(cfg, params):
    sol = cfg["solver"]
    cal = load_calibration()
    K = sol["K"] if sol["K"] > 0 else cal["K"]["frozen"]
    eps = sol["epsilon"] if sol["epsilon"] > 0 else None
    config = SolverConfig(params=params, dt=sol["dt"], T=sol["T"],
                          p=cfg["physics"]["p"], q=cfg["physics"]["q"],
                          picard_tol=sol["picard_tol"],
                          picard_max_iter=sol["picard_max_iter"],
                          K=K, epsilon=eps,
                          record_every=sol["record_every"])
    return config, cal


def _make_field(kind, snapshot, band, mode, amplitude, norm_params, grid,
                frame, seed):
    if kind == "none":
        return None
    if kind == "snapshot":
        field, _ = read_snapshot(snapshot, grid)
        return field
    kwargs = {}
    if kind == "single_mode":
        kwargs["k"] = tuple(int(c) for c in mode)
    return generate_data(kind, grid, seed=seed, amplitude=amplitude,
                         band=tuple(band), norm_params=norm_params,
                         frame=frame, **kwargs)


class _Setup:
    """Shared construction for all experiment drivers."""

    def __init__(self, config):
        self.raw = config
        g = config["grid"]
        ph = config["physics"]
        self.grid = FrequencyGrid(g["n"], g["period"], g["dealias_fraction"])
        self.frame = build_frame(self.grid)
        # the scan admits the wider stationary range alpha in (1/2, 5/4);
        # p then only shapes the norm, via estimate_omega_threshold
        scan = config["experiment"]["kind"] == "omega_scan"
        self.params = PhysicalParams(ph["nu"], ph["alpha"], ph["omega"],
                                     p=None if scan else ph["p"])
        self.solver, self.calibration = _build_solver_config(config, self.params)
        self.exp = config["experiment"]
        self.fb_vel = self.solver.velocity_norm()
        self.fb_for = self.solver.force_norm()

    @property
    def epsilon(self):
        return self.solver.epsilon

    def force_amplitude(self):
        gate_factor = self.exp["force_gate_factor"]
        if gate_factor > 0:
            C = self.calibration["C_force"]["frozen"]
            return gate_factor * self.epsilon * self.params.nu / C
        return self.exp["force_epsilon_factor"] * self.epsilon

    def initial_field(self):
        e = self.exp
        return _make_field(e["initial_kind"], e["initial_snapshot"],
                           e["initial_band"], e["force_mode"],
                           e["initial_epsilon_factor"] * self.epsilon,
                           self.fb_vel, self.grid, self.frame, e["seed"])

    def force_field(self):
        e = self.exp
        return _make_field(e["force_kind"], e["force_snapshot"],
                           e["force_band"], e["force_mode"],
                           self.force_amplitude(), self.fb_for, self.grid,
                           self.frame, e["seed"] + 1)

    def perturbation(self, factor_key="perturbation_epsilon_factor"):
        e = self.exp
        return _make_field(e["perturbation_kind"], "", e["initial_band"],
                           e["perturbation_mode"],
                           e[factor_key] * self.epsilon, self.fb_vel,
                           self.grid, self.frame, e["seed"] + 2)


def _norm_columns(norms):
    cols = ["time", "fb_norm_critical", "divergence_residual", "energy"]
    if norms.gap_norm and len(norms.gap_norm) == len(norms.times):
        cols.insert(2, "gap_norm")
    return cols


def _drive_wellposed(setup, outdir, manifest):
    u0 = setup.initial_field()
    if u0 is None:
        u0 = SpectralField.zeros(setup.grid)
    F = setup.force_field()
    F_series = [(0.0, F)] if F is not None else None
    gate = theorem1_gate(u0, F_series, setup.solver, setup.frame)
    manifest.data["gates"]["theorem1"] = _gate_dict(gate)
    if not gate.passed and not setup.exp["allow_gate_fail"]:
        raise GateError("smallness gate failed: ||u0||+||F|| = %g >= epsilon %g"
                        % (gate.total, gate.epsilon))
    write_snapshot(os.path.join(outdir, "initial.fnsc"), u0, setup.params)
    if F is not None:
        write_snapshot(os.path.join(outdir, "force.fnsc"), F, setup.params)
    trajectory, norms = evolve(u0, F_series, setup.solver, setup.frame,
                               record_trajectory=False)
    csv_path = os.path.join(outdir, "norms.csv")
    write_csv(csv_path, _norm_columns(norms), norms.rows())
    peak = max(norms.fb_norm_critical)
    manifest.data["results"] = {
        "recorded_points": len(norms.times),
        "peak_critical_norm": peak,
        "final_critical_norm": norms.fb_norm_critical[-1],
        "ball_bound_2eps": 2.0 * setup.epsilon,
        "stayed_in_ball": bool(peak <= 2.0 * setup.epsilon + 1e-6),
        "advisory": bool(not gate.passed),
    }
    return ["initial.fnsc", "norms.csv"] + (["force.fnsc"] if F is not None else []), [
        "peak critical norm %.6g vs ball bound %.6g"
        % (peak, 2.0 * setup.epsilon)]


def _drive_stability(setup, outdir, manifest):
    u0 = setup.initial_field()
    pert = setup.perturbation()
    v0 = u0 + pert
    F = setup.force_field()
    F_series = [(0.0, F)] if F is not None else None
    e = setup.exp
    if e["force_gap_kind"] == "none" or F is None:
        G_series = F_series
    else:
        gap = setup.perturbation("force_gap_epsilon_factor")
        gap_force = _rescale_to(gap, setup.fb_for, setup.frame,
                                e["force_gap_epsilon_factor"] * setup.epsilon)
        if e["force_gap_kind"] == "pulse":
            G_series = [(0.0, F + gap_force), (e["force_gap_until"], F)]
        else:
            G_series = [(0.0, F + gap_force)]
    report = stability_experiment(u0, v0, F_series, G_series, setup.solver,
                                  setup.frame)
    manifest.data["gates"]["theorem1_u"] = _gate_dict(report.gate_u)
    manifest.data["gates"]["theorem1_v"] = _gate_dict(report.gate_v)
    rows = [{"time": t, "gap_norm": report.gap[i],
             "semigroup_gap": report.semigroup_gap[i],
             "force_gap": report.force_gap[i]}
            for i, t in enumerate(report.times)]
    csv_path = os.path.join(outdir, "gap.csv")
    write_csv(csv_path, ["time", "gap_norm", "semigroup_gap", "force_gap"], rows)
    manifest.data["results"] = {
        "gap_initial": report.gap[0],
        "gap_final": report.gap[-1],
        "gap_ratio": report.gap_ratio,
        "hypothesis_initial_ok": report.hypothesis_initial_ok,
        "hypothesis_force_ok": report.hypothesis_force_ok,
        "decay_asserted": report.decay_asserted,
    }
    lines = ["gap ratio %.3e over [0, %g]" % (report.gap_ratio, setup.solver.T)]
    if not report.hypothesis_ok:
        lines.append("limit hypotheses not met; no decay asserted")
    return ["gap.csv"], lines


def _rescale_to(field, fb, frame, target):
    norm = fb_norm(field, fb, frame)
    out = field.copy()
    if norm > 0:
        out.coeffs *= target / norm
    return out


def _drive_stationary(setup, outdir, manifest):
    F = setup.force_field()
    if F is None:
        raise ConfigError("stationary experiment needs a force")
    result = stationary_picard(F, setup.params, setup.solver, setup.frame)
    if not result.converged:
        raise DivergenceError("stationary iteration stalled at residual %g"
                              % result.residual)
    write_snapshot(os.path.join(outdir, "force.fnsc"), F, setup.params)
    write_snapshot(os.path.join(outdir, "u_inf.fnsc"), result.u, setup.params)
    rows = [{"iteration": i + 1, "residual": r}
            for i, r in enumerate(result.residual_history)]
    write_csv(os.path.join(outdir, "residuals.csv"), ["iteration", "residual"], rows)
    t_samples = list(setup.exp["t_samples"])
    equiv = verify_stationary_equivalence(result.u, F, t_samples, setup.params,
                                          dt=setup.exp["equivalence_dt"],
                                          q_norm=setup.solver.q,
                                          frame=setup.frame, detail=True)
    results = {
        "iterations": result.iterations,
        "residual": result.residual,
        "u_inf_norm": fb_norm(result.u, setup.fb_vel, setup.frame),
        "force_norm": fb_norm(F, setup.fb_for, setup.frame),
        "equivalence_residuals": {fmt17(t): v for t, v in equiv.items()},
        "equivalence_max": max(equiv.values()),
    }
    if result.gate_warning:
        results["gate_warning"] = result.gate_warning
    lines = ["converged in %d iterations, residual %.3e"
             % (result.iterations, result.residual),
             "stationarity identity residual %.3e" % results["equivalence_max"]]
    n_starts = int(setup.exp["probe_starts"])
    if n_starts > 1:
        probe = uniqueness_probe(F, setup.params, setup.solver,
                                 n_starts=n_starts,
                                 seed=setup.exp["seed"] + 10,
                                 frame=setup.frame)
        results["uniqueness_spread"] = probe.spread
        results["uniqueness_all_converged"] = probe.all_converged
        lines.append("uniqueness spread %.3e over %d starts"
                     % (probe.spread, n_starts))
    manifest.data["results"] = results
    return ["force.fnsc", "u_inf.fnsc", "residuals.csv"], lines


def _drive_converge(setup, outdir, manifest):
    F = setup.force_field()
    if F is None:
        raise ConfigError("converge_to_stationary needs a force")
    stat = stationary_picard(F, setup.params, setup.solver, setup.frame)
    if not stat.converged:
        raise DivergenceError("stationary iteration stalled")
    pert = setup.perturbation()
    v0 = stat.u + pert
    e = setup.exp
    F_series = [(0.0, F)]
    if e["force_gap_kind"] == "pulse" and e["force_gap_epsilon_factor"] > 0:
        gap_force = _rescale_to(pert, setup.fb_for, setup.frame,
                                e["force_gap_epsilon_factor"] * setup.epsilon)
        G_series = [(0.0, F + gap_force), (e["force_gap_until"], F)]
    else:
        G_series = F_series
    report = converge_to_stationary_experiment(
        v0, G_series, F, setup.params, setup.solver, setup.frame,
        u_inf=stat.u, gate_C=setup.calibration["C_force"]["frozen"])
    write_snapshot(os.path.join(outdir, "u_inf.fnsc"), stat.u, setup.params)
    rows = [{"time": t, "gap_norm": report.gap[i],
             "semigroup_gap": report.semigroup_gap[i],
             "force_gap": report.force_gap[i]}
            for i, t in enumerate(report.times)]
    write_csv(os.path.join(outdir, "gap.csv"),
              ["time", "gap_norm", "semigroup_gap", "force_gap"], rows)
    manifest.data["results"] = {
        "gap_initial": report.initial_gap,
        "gap_final": report.final_gap,
        "hypothesis_initial_ok": report.hypothesis_initial_ok,
        "hypothesis_force_ok": report.hypothesis_force_ok,
        "success": report.success,
    }
    return ["u_inf.fnsc", "gap.csv"], [
        "gap %.3e -> %.3e, success=%s"
        % (report.initial_gap, report.final_gap, report.success)]


def _drive_omega_scan(setup, outdir, manifest):
    F = setup.force_field()
    if F is None:
        raise ConfigError("omega_scan needs a force")
    e = setup.exp
    eps = e["scan_epsilon"] if e["scan_epsilon"] > 0 else setup.epsilon
    omegas = [float(2.0 ** k) for k in range(0, int(e["omega_max_power"]) + 1)]
    scan = estimate_omega_threshold(F, setup.params, setup.solver.p, eps,
                                    q=setup.solver.q, omegas=omegas,
                                    frame=setup.frame, workers=worker_count())
    write_snapshot(os.path.join(outdir, "force.fnsc"), F, setup.params)
    write_csv(os.path.join(outdir, "scan.csv"),
              ["omega", "x_norm", "region_A", "region_B", "region_C"],
              scan.rows())
    summary = {
        "epsilon": scan.epsilon,
        "force_fb_norm": scan.force_fb_norm,
        "omega_threshold": scan.omega_threshold,
        "threshold_index": scan.threshold_index,
        "delta": scan.delta,
        "omega0_analytic": scan.omega0_analytic,
        "support_tail": scan.support_tail,
        "tail_J": scan.tail_J,
        "tail_value": scan.tail_value,
        "flags": scan.flags,
    }
    outputs = ["force.fnsc", "scan.csv", "scan_summary.json"]
    lines = []
    if scan.omega_threshold is None:
        lines.append("no threshold within the scan range (flags: %s)"
                     % ",".join(scan.flags))
    else:
        lines.append("threshold omega = %g (analytic bound %s)"
                     % (scan.omega_threshold,
                        "n/a" if scan.omega0_analytic is None
                        else "%g" % scan.omega0_analytic))
        if e["confirm_picard"]:
            params_t = setup.params.with_omega(scan.omega_threshold)
            result = stationary_picard(F, params_t, setup.solver, setup.frame)
            summary["picard_at_threshold"] = {
                "converged": result.converged,
                "iterations": result.iterations,
                "residual": result.residual,
            }
            if result.converged:
                write_snapshot(os.path.join(outdir, "u_inf_at_threshold.fnsc"),
                               result.u, params_t)
                outputs.append("u_inf_at_threshold.fnsc")
                lines.append("stationary solve at threshold: %d iterations"
                             % result.iterations)
            else:
                lines.append("stationary solve at threshold did not converge")
    with open(os.path.join(outdir, "scan_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.data["results"] = summary
    return outputs, lines


_DRIVERS = {
    "wellposed": _drive_wellposed,
    "stability": _drive_stability,
    "stationary": _drive_stationary,
    "converge_to_stationary": _drive_converge,
    "omega_scan": _drive_omega_scan,
}


def run_experiment(config_path, outdir=None):
    """Execute one configured experiment; returns (manifest_dict, outdir)."""
    config = load_config(config_path)
    kind = config["experiment"]["kind"]
    if kind == "verify_suite":
        ok, table = verify_suite()
        print(table)
        if not ok:
            raise RuntimeError("verification battery failed")
        return None, None
    setup = _Setup(config)
    out = outdir or config["experiment"]["outdir"]
    os.makedirs(out, exist_ok=True)
    run_id = run_id_for(config)
    manifest = RunManifest(run_id, kind, config)
    manifest.data["constants"] = {
        "K": setup.solver.K,
        "epsilon": setup.solver.epsilon,
        "C_force": setup.calibration["C_force"]["frozen"],
        "semigroup": setup.calibration["semigroup"]["frozen"],
    }
    manifest_path = os.path.join(out, "manifest.json")
    manifest.write(manifest_path)
    started = time.monotonic()
    try:
        outputs, lines = _DRIVERS[kind](setup, out, manifest)
    except Exception as err:
        manifest.data["status"] = "failed"
        manifest.data["error"] = "%s: %s" % (type(err).__name__, err)
        manifest.data["timings"]["wall_s"] = time.monotonic() - started
        manifest.write(manifest_path)
        raise
    wall = time.monotonic() - started
    manifest.data["status"] = "done"
    manifest.data["outputs"] = sorted(outputs + ["summary.txt"])
    manifest.data["timings"]["wall_s"] = wall
    manifest.write(manifest_path)
    summary = ["fnsc %s run %s" % (kind, run_id),
               "grid n=%d period=%.6g" % (setup.grid.n_per_dim, setup.grid.period),
               "nu=%g alpha=%g omega=%g p=%g q=%g"
               % (setup.params.nu, setup.params.alpha, setup.params.omega,
                  setup.solver.p, setup.solver.q),
               "K=%.6g epsilon=%.6g" % (setup.solver.K, setup.solver.epsilon)]
    summary += lines
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    return manifest.data, out


# ---------------------------------------------------------------------------
# verification battery


def _scalar_picard_model():
    from .solver import picard_solve
    res = picard_solve(0.1, lambda a, b: a * b, K=1.0, tol=1e-13, max_iter=60)
    exact = (1.0 - math.sqrt(0.6)) / 2.0
    return abs(res.x - exact), res


def _kernel_quad_entry(a, b):
    """Entries of e^{-a t}(cos bt, sin bt) integrated over [0, inf) by QUADPACK.

    The infinite-range Fourier routine needs many oscillations inside the
    decay window to extrapolate; when the exponential dies within a
    fraction of one period it returns garbage, so that regime is handed
    to the finite-interval oscillatory rule on [0, 40/a] instead (the
    truncated tail is below 5e-18 relative).
    """
    from scipy import integrate
    if b == 0.0:
        cos_part = integrate.quad(lambda t: math.exp(-a * t), 0.0, np.inf,
                                  epsabs=1e-13, epsrel=1e-13)[0]
        return cos_part, 0.0
    if abs(b) <= a:
        cut = 40.0 / a
        cos_part = integrate.quad(lambda t: math.exp(-a * t), 0.0, cut,
                                  weight="cos", wvar=b, epsabs=1e-13,
                                  epsrel=1e-13, limit=400)[0]
        sin_part = integrate.quad(lambda t: math.exp(-a * t), 0.0, cut,
                                  weight="sin", wvar=b, epsabs=1e-13,
                                  epsrel=1e-13, limit=400)[0]
        return cos_part, sin_part
    cos_part = integrate.quad(lambda t: math.exp(-a * t), 0.0, np.inf,
                              weight="cos", wvar=b, epsabs=1e-12,
                              limlst=200, limit=400)[0]
    sin_part = integrate.quad(lambda t: math.exp(-a * t), 0.0, np.inf,
                              weight="sin", wvar=b, epsabs=1e-12,
                              limlst=200, limit=400)[0]
    return cos_part, sin_part


def verify_suite(n=32, quick=False, seed=91):
    """Run the cross-module invariant battery and format a result table.

    Returns (all_passed, table_text).  Kept under a few minutes at n=32;
    pass quick=True to trim the slowest items for smoke use.
    """
    from .datagen import random_band, taylor_green
    from .frame import check_bernstein, check_scaling
    from .nonlinear import verify_paraproduct_identity
    from .stationary import region_decomposition
    from .symbols import apply_semigroup, rotation_matrix, stationary_kernel

    checks = []
    rng = np.random.default_rng(seed)
    grid = FrequencyGrid(n)
    frame = build_frame(grid)
    cal = load_calibration()
    alpha = cal["reference"]["alpha"]
    nu = cal["reference"]["nu"]
    params = PhysicalParams(nu, alpha, 10.0)
    fb_vel = FBParams.velocity(alpha, 2.0, 2.0)
    fb_for = FBParams.force(alpha, 2.0, 2.0)

    def add(name, value, bound):
        checks.append((name, value <= bound, value, bound))

    add("partition of unity defect", frame.partition_defect(), 1e-12)

    pairs = 3 if quick else 8
    worst = 0.0
    for _ in range(pairs):
        f = random_band(grid, 1, max(2, n // 3 - 1), rng=rng)
        g = random_band(grid, 1, max(2, n // 3 - 1), rng=rng)
        worst = max(worst, verify_paraproduct_identity(_scalarize(f),
                                                       _scalarize(g), frame))
    add("paraproduct identity residual", worst, 1e-12)

    u = random_band(grid, 1, 5, rng=rng)
    s0 = apply_semigroup(u, 0.0, params)
    add("semigroup at t=0 is identity",
        float(np.max(np.abs(s0.coeffs - u.coeffs))), 0.0)
    one = apply_semigroup(apply_semigroup(u, 0.3, params), 0.7, params)
    two = apply_semigroup(u, 1.0, params)
    denom = max(1e-30, float(np.max(np.abs(two.coeffs))))
    add("semigroup composition residual",
        float(np.max(np.abs(one.coeffs - two.coeffs))) / denom, 1e-12)
    p0 = params.with_omega(0.0)
    heat = apply_semigroup(u, 0.5, p0)
    mult = np.exp(-p0.nu * grid.xi_mag ** (2 * p0.alpha) * 0.5)
    add("zero-rotation heat reduction",
        float(np.max(np.abs(heat.coeffs - mult * u.coeffs))), 1e-14)
    add("semigroup divergence residual",
        apply_semigroup(u, 0.4, params).divergence_residual(), 1e-12)

    samples = 100 if quick else 400
    worst = 0.0
    bound_ok = True
    for _ in range(samples):
        nu_s = rng.uniform(0.25, 4.0)
        alpha_s = rng.uniform(0.6, 1.2)
        om_s = rng.choice([0.0, rng.uniform(0.0, 100.0)])
        xi = rng.uniform(-8.0, 8.0, size=3)
        if np.linalg.norm(xi) < 0.25:
            continue
        ps = PhysicalParams(nu_s, alpha_s, om_s)
        kern = stationary_kernel(xi, ps)
        mag = np.linalg.norm(xi)
        a = nu_s * mag ** (2 * alpha_s)
        b = om_s * xi[2] / mag
        cos_part, sin_part = _kernel_quad_entry(a, b)
        ref = cos_part * np.eye(3) + sin_part * rotation_matrix(xi)
        err = float(np.max(np.abs(kern - ref)))
        worst = max(worst, err / (1.0 + float(np.max(np.abs(ref)))))
        cap = mag ** (-2 * alpha_s) / nu_s
        if float(np.max(np.abs(kern))) > cap * (1 + 1e-12):
            bound_ok = False
    add("stationary kernel vs quadrature", worst, 1e-10)
    checks.append(("kernel entry bound |xi|^-2a / nu", bound_ok,
                   0.0 if bound_ok else 1.0, 0.0))

    gap, res = _scalar_picard_model()
    add("scalar fixed-point model error", gap, 1e-12)
    checks.append(("scalar fixed-point ball ||x|| <= 2||y||",
                   abs(res.x) <= 0.2, abs(res.x), 0.2))

    fields = [random_band(grid, 1, 6, rng=rng) for _ in range(3 if quick else 6)]
    fields.append(taylor_green(grid))
    worst = 0.0
    for case in cal["bernstein"]:
        p1 = float("inf") if case["p1"] == "inf" else case["p1"]
        p2 = float("inf") if case["p2"] == "inf" else case["p2"]
        for f in fields:
            for j in frame.shells():
                piece = SpectralField(grid, frame.phi[j] * f.coeffs, copy=False)
                if np.max(piece.magnitude()) <= 0.0:
                    continue
                rep = check_bernstein(piece, j, tuple(case["beta"]), p1, p2, frame)
                worst = max(worst, rep["ratio"] / case["frozen"])
    add("shell inequality vs frozen constants", worst, 1.0)

    worst = 0.0
    for f in fields:
        xv = x_norm(f, params, fb_for, frame)
        fv = fb_norm(f, fb_for, frame)
        if fv > 0:
            worst = max(worst, xv / (fv / params.nu))
    add("weighted norm under (1/nu) force norm", worst, 1.0)

    a_m, b_m, c_m = region_decomposition(grid, 0.5)
    union = a_m | b_m | c_m
    overlap = (a_m & b_m) | (a_m & c_m) | (b_m & c_m)
    part_ok = bool(np.all(union == grid.nonzero_mask) and not np.any(overlap))
    checks.append(("region masks partition lattice", part_ok,
                   0.0 if part_ok else 1.0, 0.0))

    lhs, rhs = check_scaling(fields[0], 2, fb_vel, frame)
    add("dyadic scaling law residual",
        abs(lhs - rhs) / max(rhs, 1e-30), 1e-8)

    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "probe.fnsc")
        write_snapshot(path, fields[0], params)
        back, back_params = read_snapshot(path)
        same = (np.array_equal(back.coeffs, fields[0].coeffs)
                and back_params.key() == params.key())
        checks.append(("snapshot round trip", bool(same),
                       0.0 if same else 1.0, 0.0))

    all_ok = all(ok for _, ok, _, _ in checks)
    width = max(len(name) for name, _, _, _ in checks)
    lines = ["%-*s  %s  (%.3e vs %.3e)" % (width, name,
                                           "PASS" if ok else "FAIL", val, bnd)
             for name, ok, val, bnd in checks]
    lines.append("%d/%d checks passed" % (sum(ok for _, ok, _, _ in checks),
                                          len(checks)))
    return all_ok, "\n".join(lines)


def _scalarize(field):
    """First component of a vector field as a scalar coefficient array."""
    return field.coeffs[0]
