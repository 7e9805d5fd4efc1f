"""Command-line entry points.

Exit codes for `fnsc run`: 0 success, 2 smallness-gate refusal,
3 numerical divergence, 4 configuration or I/O failure.
"""

from __future__ import annotations

import sys

import click

from . import datagen
from .experiments import (ConfigError, config_reference, run_experiment,
                          verify_suite)
from .frame import FBParams, build_frame, fb_norm
from .grid import FrequencyGrid
from .snapshot import SnapshotError, read_snapshot, write_snapshot
from .solver import DivergenceError, GateError
from .symbols import PhysicalParams

EXIT_GATE = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


@click.group()
@click.version_option(package_name="fnsc")
def main():
    """Pseudospectral toolkit for the rotating fractional flow equations."""


@main.command()
@click.argument("config", type=click.Path())
@click.option("--outdir", default=None, help="override [experiment].outdir")
def run(config, outdir):
    """Execute the experiment described by a TOML CONFIG file."""
    try:
        manifest, out = run_experiment(config, outdir)
    except (ConfigError, SnapshotError, OSError) as err:
        click.echo("config/io error: %s" % err, err=True)
        sys.exit(EXIT_IO)
    except GateError as err:
        click.echo("gate refusal: %s" % err, err=True)
        sys.exit(EXIT_GATE)
    except DivergenceError as err:
        click.echo("numerical divergence: %s" % err, err=True)
        sys.exit(EXIT_DIVERGENCE)
    if manifest is not None:
        click.echo("run %s done -> %s" % (manifest["run_id"], out))
        if manifest["results"].get("advisory"):
            click.echo("gate failed; results are advisory", err=True)
            sys.exit(EXIT_GATE)


@main.command()
@click.option("--n", default=32, show_default=True, help="grid modes per dimension")
@click.option("--quick", is_flag=True, help="trim the slow battery items")
def verify(n, quick):
    """Run the cross-module invariant battery."""
    ok, table = verify_suite(n=n, quick=quick)
    click.echo(table)
    if not ok:
        sys.exit(1)


@main.command()
@click.argument("kind", type=click.Choice(datagen.KINDS))
@click.option("--out", required=True, type=click.Path(), help="snapshot path")
@click.option("--n", default=32, show_default=True)
@click.option("--period", default=6.283185307179586, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--amplitude", default=1.0, show_default=True,
              help="target critical norm (or raw scale with --index raw)")
@click.option("--band", nargs=2, type=int, default=(1, 3), show_default=True)
@click.option("--mode", nargs=3, type=int, default=(0, 0, 1), show_default=True,
              help="wavevector for single_mode")
@click.option("--decay", type=float, default=None, help="homogeneous_like exponent")
@click.option("--nu", default=1.0, show_default=True)
@click.option("--alpha", default=0.75, show_default=True)
@click.option("--omega", default=0.0, show_default=True)
@click.option("--p", "p", default=2.0, show_default=True)
@click.option("--q", "q", default=2.0, show_default=True)
@click.option("--index", type=click.Choice(["velocity", "force", "raw"]),
              default="velocity", show_default=True,
              help="norm index used to set the amplitude")
def gen(kind, out, n, period, seed, amplitude, band, mode, decay, nu, alpha,
        omega, p, q, index):
    """Generate a deterministic field snapshot of the given KIND."""
    try:
        grid = FrequencyGrid(n, period)
        if index == "velocity":
            norm_params = FBParams.velocity(alpha, p, q)
        elif index == "force":
            norm_params = FBParams.force(alpha, p, q)
        else:
            norm_params = None
        kwargs = {}
        if kind == "single_mode":
            kwargs["k"] = tuple(mode)
        if kind == "homogeneous_like" and decay is not None:
            kwargs["decay"] = decay
        field = datagen.generate_data(kind, grid, seed=seed, amplitude=amplitude,
                                      band=tuple(band), norm_params=norm_params,
                                      frame=build_frame(grid), **kwargs)
        params = PhysicalParams(nu, alpha, omega, p=p)
        write_snapshot(out, field, params)
    except (ValueError, OSError) as err:
        click.echo("gen failed: %s" % err, err=True)
        sys.exit(EXIT_IO)
    click.echo("wrote %s" % out)


@main.command()
@click.argument("snapshot", type=click.Path())
@click.option("--s", "s", type=float, required=True, help="regularity index")
@click.option("--p", "p", default=2.0, show_default=True)
@click.option("--q", "q", default=2.0, show_default=True)
def norms(snapshot, s, p, q):
    """Print norms of a stored field at the requested indices."""
    try:
        field, params = read_snapshot(snapshot)
    except (SnapshotError, OSError) as err:
        click.echo("cannot read snapshot: %s" % err, err=True)
        sys.exit(EXIT_IO)
    frame = build_frame(field.grid)
    value = fb_norm(field, FBParams(s, p, q), frame)
    click.echo("fb_norm(s=%g, p=%g, q=%g) = %.17g" % (s, p, q, value))
    click.echo("energy               = %.17g" % field.energy())
    click.echo("divergence residual  = %.3e" % field.divergence_residual())
    click.echo("time tag             = %g" % field.time_tag)
    click.echo("stored nu=%g alpha=%g omega=%g"
               % (params.nu, params.alpha, params.omega))


@main.command("config-reference")
def config_reference_cmd():
    """Print every config key with its default value."""
    click.echo(config_reference(), nl=False)


if __name__ == "__main__":
    main()
