"""Experiment front door: run the named experiments, emit CSV tables and plots.

Every table is written with a header row and 12-significant-digit scientific
notation, so identical configurations (including seeds) produce byte-identical
artifacts.  Plots are emitted as small generated scripts that read the CSV,
keeping the artifacts free of rendering dependencies.

Exit codes: 0 on success, 2 on configuration/validation errors, 1 on internal
errors.  The environment variable WILLMORE_THREADS caps the worker thread
count of the numerical backend (default: hardware parallelism).
"""

from __future__ import annotations

import functools
import os
import sys
import traceback

import click

__all__ = ["main"]


def _apply_thread_cap() -> None:
    cap = os.environ.get("WILLMORE_THREADS")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        raise click.UsageError(f"WILLMORE_THREADS must be an integer, got {cap!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def _write_csv(path: str, header: list[str], rows: list[list[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_PLOT_TEMPLATE = '''"""Generated plot script; reads {csv} from its own directory."""
import csv
import os

import matplotlib.pyplot as plt

path = os.path.join(os.path.dirname(os.path.abspath(__file__)), {csv!r})
with open(path) as fh:
    reader = csv.DictReader(fh)
    cols = {{name: [] for name in reader.fieldnames}}
    for row in reader:
        for name, value in row.items():
            cols[name].append(float(value))

fig, ax = plt.subplots()
for name in {ycols!r}:
    ax.plot(cols[{xcol!r}], cols[name], label=name)
ax.set_xlabel({xcol!r})
ax.set_yscale({yscale!r})
ax.legend()
fig.savefig(os.path.splitext(path)[0] + ".png", dpi=150)
'''


def _emit_plot(outdir: str, csv_name: str, xcol: str, ycols: list[str],
               yscale: str = "linear") -> str:
    name = os.path.splitext(csv_name)[0] + "_plot.py"
    path = os.path.join(outdir, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(_PLOT_TEMPLATE.format(csv=csv_name, xcol=xcol, ycols=ycols,
                                       yscale=yscale))
    return path


def _command_errors(func):
    """Map validation failures to exit 2 and unexpected failures to exit 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except Exception:
            traceback.print_exc()
            sys.exit(1)

    return wrapper


@click.group()
def main() -> None:
    """Penalized Willmore bending energies: envelopes, laminates, recovery."""
    _apply_thread_cap()


def _out_option(func):
    return click.option("--out", type=click.Path(file_okay=False), default=".",
                        show_default=True, help="Output directory.")(func)


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

def emit_envelope_table(p, v, ray, t_lo: float, t_hi: float,
                        samples: int) -> tuple[list[str], list[list[float]]]:
    """Raw density, its envelope, and the limit density along the ray t*ray."""
    import numpy as np

    from .energies import G_density, f_raw, h_lambda
    from .geometry import SymMat2

    if samples < 2:
        raise ValueError("need at least 2 samples along the ray")
    header = ["t", "f_raw", "h_lambda", "G"]
    rows = []
    for t in np.linspace(t_lo, t_hi, samples):
        xi = SymMat2(t * ray.a11, t * ray.a12, t * ray.a22)
        rows.append([float(t), f_raw(p, v, xi), h_lambda(p, v, xi),
                     G_density(v, xi)])
    return header, rows


@main.command()
@click.option("--lam", "--lambda", "lam", type=float, required=True,
              help="Penalization strength lambda > 0.")
@click.option("--ray", nargs=3, type=float, default=(1.0, 0.0, 1.0),
              show_default=True, help="Matrix ray entries a11 a12 a22.")
@click.option("--tilt", nargs=2, type=float, default=(0.0, 0.0),
              show_default=True, help="Gradient v1 v2 held fixed.")
@click.option("--t-range", nargs=2, type=float, default=(0.0, 4.0),
              show_default=True, help="Ray parameter range.")
@click.option("--samples", type=int, default=129, show_default=True)
@_out_option
@_command_errors
def envelope(lam, ray, tilt, t_range, samples, out) -> None:
    """Tabulate f_raw, h_lambda and G along a matrix ray."""
    from .energies import Penalty
    from .geometry import SymMat2, Tilt

    os.makedirs(out, exist_ok=True)
    header, rows = emit_envelope_table(
        Penalty(lam), Tilt(*tilt), SymMat2(*ray), t_range[0], t_range[1], samples)
    path = os.path.join(out, "envelope.csv")
    _write_csv(path, header, rows)
    _emit_plot(out, "envelope.csv", "t", ["f_raw", "h_lambda", "G"])
    click.echo(f"wrote {path} ({len(rows)} rows)")


# ---------------------------------------------------------------------------
# relax1d
# ---------------------------------------------------------------------------

@main.command()
@click.option("--lam", "--lambda", "lam", type=float, required=True)
@click.option("--range", "krange", nargs=2, type=float, default=(-8.0, 8.0),
              show_default=True, help="Curvature window (symmetric around 0).")
@click.option("--points", type=int, default=4096, show_default=True,
              help="Number of grid intervals (an even count keeps kappa = 0 "
                   "on the grid).")
@_out_option
@_command_errors
def relax1d(lam, krange, points, out) -> None:
    """Compare the closed-form 1-D convex envelope with the discrete biconjugate."""
    import numpy as np

    from .energies import Penalty, envelope_1d, f1d_raw
    from .oracles import convex_envelope_1d_numeric

    p = Penalty(lam)
    grid = np.linspace(krange[0], krange[1], points + 1)
    numeric = convex_envelope_1d_numeric(p, grid)
    closed = np.array([envelope_1d(p, k) for k in grid])
    raw = np.array([f1d_raw(p, k) for k in grid])
    sup_err = float(np.max(np.abs(closed - numeric)))

    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "relax1d.csv")
    _write_csv(path, ["kappa", "f_raw", "envelope_closed", "envelope_numeric"],
               [[float(k), float(f), float(c), float(n)]
                for k, f, c, n in zip(grid, raw, closed, numeric)])
    _emit_plot(out, "relax1d.csv", "kappa",
               ["f_raw", "envelope_closed", "envelope_numeric"])
    click.echo(f"sup|closed - numeric| = {_fmt(sup_err)}")
    click.echo(f"wrote {path} ({grid.size} rows)")


# ---------------------------------------------------------------------------
# laminate
# ---------------------------------------------------------------------------

@main.command()
@click.option("--lam", "--lambda", "lam", type=float, required=True)
@click.option("--tilt", nargs=2, type=float, default=(0.0, 0.0), show_default=True)
@click.option("--xi", nargs=3, type=float, required=True,
              help="Hessian entries x11 x12 x22.")
@click.option("--refinement", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_out_option
@_command_errors
def laminate(lam, tilt, xi, refinement, seed, out) -> None:
    """Build the certifying laminate and measure its realized cell average."""
    from .energies import Penalty, h_lambda
    from .geometry import SymMat2, Tilt
    from .oracles import OracleConfig, build_laminate, realize_laminate

    p = Penalty(lam)
    v, mat = Tilt(*tilt), SymMat2(*xi)
    spec = build_laminate(p, v, mat)
    cfg = OracleConfig(refinement=refinement, seed=seed)
    _, measured = realize_laminate(spec, cfg)
    closed = h_lambda(p, v, mat)

    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "laminate.csv")
    _write_csv(path,
               ["lambda", "alpha", "beta", "predicted", "closed_form",
                "measured", "refinement"],
               [[lam, spec.alpha, spec.beta, spec.predicted_value, closed,
                 measured, float(refinement)]])
    click.echo(f"predicted {_fmt(spec.predicted_value)}  closed form "
               f"{_fmt(closed)}  measured {_fmt(measured)}")
    click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# jumpcost
# ---------------------------------------------------------------------------

@main.command()
@click.option("--side-a", "a", nargs=2, type=float, required=True,
              help="Gradient on the positive side of the jump.")
@click.option("--side-b", "b", nargs=2, type=float, required=True,
              help="Gradient on the negative side of the jump.")
@click.option("--nu", nargs=2, type=float, default=(0.0, 1.0), show_default=True,
              help="Unit normal of the jump line.")
@click.option("--points", type=int, default=256, show_default=True)
@_out_option
@_command_errors
def jumpcost(a, b, nu, points, out) -> None:
    """Closed-form vs numerically minimized transition cost of a gradient jump."""
    from .energies import JumpDatum, jump_cost
    from .geometry import Tilt
    from .oracles import numeric_jump_cost

    datum = JumpDatum(a=Tilt(*a), b=Tilt(*b), nu=nu)
    closed = jump_cost(datum)
    numeric = numeric_jump_cost(datum, profile_points=points)

    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "jumpcost.csv")
    _write_csv(path, ["a1", "a2", "b1", "b2", "nu1", "nu2", "closed", "numeric"],
               [[a[0], a[1], b[0], b[1], nu[0], nu[1], closed, numeric]])
    click.echo(f"closed {_fmt(closed)}  numeric {_fmt(numeric)}")
    click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# limit-energy
# ---------------------------------------------------------------------------

@main.command("limit-energy")
@click.argument("scene_path", type=click.Path(exists=True, dir_okay=False))
@_command_errors
def limit_energy_cmd(scene_path) -> None:
    """Evaluate the limit functional (bulk + jump) of a scene file."""
    from .fields import limit_energy, load_scene

    scene = load_scene(scene_path)
    breakdown = limit_energy(scene)
    click.echo(f"bulk   {_fmt(breakdown.bulk)}")
    click.echo(f"jump   {_fmt(breakdown.jump)}")
    click.echo(f"cantor {_fmt(breakdown.cantor)}")
    click.echo(f"total  {_fmt(breakdown.total)}")


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------

@main.command()
@click.argument("scene_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lam", "--lambda", "lams", type=float, multiple=True,
              default=(100.0, 1000.0, 10000.0), show_default=True)
@click.option("--resolution", type=int, default=1025, show_default=True)
@_out_option
@_command_errors
def recovery(scene_path, lams, resolution, out) -> None:
    """Run the mollify-and-round recovery pipeline along a lambda ladder."""
    from .fields import load_scene
    from .recovery import recovery_experiment

    scene = load_scene(scene_path)
    report = recovery_experiment(scene, list(lams), resolution)

    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "recovery.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write(report.to_csv())
    _emit_plot(out, "recovery.csv", "lambda", ["gap"], yscale="log")
    for lam, eps, gap in zip(report.lambdas, report.epsilons, report.gaps):
        click.echo(f"lambda {lam:g}: epsilon {eps:g}, gap {_fmt(gap)}")
    click.echo(f"limit value {_fmt(report.limit_value)}")
    click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@_out_option
@_command_errors
def selftest(seed, out) -> None:
    """Run the fast invariant suite; exit 0 only if every check passes."""
    import numpy as np

    from .energies import (JumpDatum, Penalty, envelope_1d, f_raw, g_lambda,
                           h_lambda, jump_cost)
    from .geometry import SymMat2, Tilt, norm_inf, shape_operator
    from .oracles import convex_envelope_1d_numeric, numeric_jump_cost

    rng = np.random.default_rng(seed)
    checks: list[tuple[str, float, float]] = []  # (name, value, bound)

    # envelope sandwich h <= f and lower bound 2|S|_inf on random samples
    worst_upper = worst_lower = -np.inf
    for _ in range(2000):
        p = Penalty(float(10.0 ** rng.uniform(-1.0, 3.0)))
        v = Tilt(*rng.normal(size=2))
        xi = SymMat2(*(3.0 * rng.normal(size=3)))
        fr, hl = f_raw(p, v, xi), h_lambda(p, v, xi)
        s = shape_operator(v, xi)
        area = np.sqrt(1.0 + v.norm_sq())
        worst_upper = max(worst_upper, hl - fr)
        worst_lower = max(worst_lower, 2.0 * norm_inf(s) * area - hl)
    checks.append(("envelope_upper_bound", worst_upper, 1e-12))
    checks.append(("envelope_lower_bound", worst_lower, 1e-12))

    # scaling identity g_lambda(xi) = sqrt(lambda) g_1(xi / sqrt(lambda))
    worst = -np.inf
    one = Penalty(1.0)
    for _ in range(2000):
        p = Penalty(float(10.0 ** rng.uniform(-1.0, 3.0)))
        xi = SymMat2(*(3.0 * rng.normal(size=3)))
        lhs = g_lambda(p, xi)
        rhs = p.sqrt_lam * g_lambda(one, SymMat2(xi.a11 / p.sqrt_lam,
                                                 xi.a12 / p.sqrt_lam,
                                                 xi.a22 / p.sqrt_lam))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    checks.append(("scaling_identity", worst, 1e-12))

    # 1-D envelope vs discrete biconjugate
    p4 = Penalty(4.0)
    grid = np.linspace(-8.0, 8.0, 1025)
    numeric = convex_envelope_1d_numeric(p4, grid)
    closed = np.array([envelope_1d(p4, k) for k in grid])
    checks.append(("relax1d_sup_error", float(np.max(np.abs(closed - numeric))),
                   1e-2))

    # jump cost closed form vs numeric on the analytic right-angle case
    tent = JumpDatum(a=Tilt(0.0, 1.0), b=Tilt(0.0, -1.0), nu=(0.0, 1.0))
    checks.append(("jumpcost_tent", abs(numeric_jump_cost(tent)
                                        - jump_cost(tent)) / np.pi, 1e-2))

    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "selftest.csv")
    lines = ["check,value,bound,passed"]
    ok = True
    for name, value, bound in checks:
        passed = value <= bound
        ok = ok and passed
        lines.append(f"{name},{_fmt(value)},{_fmt(bound)},{int(passed)}")
        click.echo(f"{'PASS' if passed else 'FAIL'} {name}: "
                   f"{_fmt(value)} <= {_fmt(bound)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(f"wrote {path}")
    if not ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
