"""Command-line front end of the St. Petersburg sums laboratory."""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional

import click
import numpy as np

from src.core.config import get_config
from src.core.exceptions import FeasibilityError, NumericOverflow, PreconditionError, QuadratureError
from src.models.models import CheckStatus, Command, RunSpec, SimConfig
from src.services import asymptotics, exact_engine, montecarlo, semistable, verification
from src.utils.csv_writer import write_csv, write_json
from src.utils.figure_generator import FIGURES, FigureGenerator

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 1
EXIT_PRECONDITION = 2
EXIT_NUMERIC = 3


def _int_list(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def handle_errors(func: Callable) -> Callable:
    """Map library errors to the documented exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (PreconditionError, FeasibilityError) as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(EXIT_PRECONDITION)
        except (QuadratureError, NumericOverflow) as e:
            click.echo(f"❌ numeric failure: {e}", err=True)
            sys.exit(EXIT_NUMERIC)
    return wrapper


def _spec(ctx: click.Context, command: Command, **params: Any) -> RunSpec:
    return RunSpec(command=command, params={k: v for k, v in params.items() if v is not None},
                   out_dir=ctx.obj["out_dir"], seed=params.get("seed"),
                   tol=params.get("tol") or get_config().numerics.default_tol)


def _out(spec: RunSpec, name: str) -> Path:
    return Path(spec.out_dir) / name


@click.group()
@click.option("--out-dir", default=None, help="Directory for CSV/JSON artifacts")
@click.option("--log-level", default=None, help="Logging level (default from LOG_LEVEL)")
@click.pass_context
def cli(ctx: click.Context, out_dir: Optional[str], log_level: Optional[str]):
    """St. Petersburg sums laboratory."""
    settings = get_config()
    level = (log_level or settings.api.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    ctx.ensure_object(dict)
    ctx.obj["out_dir"] = out_dir or settings.output.out_dir


@cli.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--k", "k", type=int, default=None, help="Condition on X_n* = 2^k")
@click.option("--cap", type=int, default=None, help="Largest materialised value")
@click.option("--tail-at", type=float, multiple=True, help="Also report P{S_n > y}")
@click.pass_context
@handle_errors
def exact(ctx, n: int, k: Optional[int], cap: Optional[int], tail_at):
    """Exact law of S_n (or of S_n given the maximum) as value,prob."""
    spec = _spec(ctx, Command.EXACT, n=n, k=k, cap=cap)
    if k is not None:
        law = exact_engine.cond_sum_law(n, k, cap)
        name = f"cond_law_n{n}_k{k}.csv"
    else:
        law = exact_engine.sum_law(n, cap or 64 * n)
        name = f"sum_law_n{n}.csv"
    write_csv(_out(spec, name), ["value", "prob"], law.csv_rows(), "exact", spec.params,
              {"form": law.form.value, "exact": law.exact, "err": law.err})
    for y in tail_at:
        tail = exact_engine.sum_tail_exact(n, y)
        click.echo(f"P{{S_{n} > {y:g}}} = {float(tail.value):.12g} (err {tail.err:.2g})")


@cli.command(name="semistable")
@click.option("--gamma", type=float, required=True)
@click.option("--j", "j", type=int, default=None, help="Conditional family index")
@click.option("--kind", type=click.Choice(["cdf", "pdf", "mixture", "direct", "moments"]), default="cdf")
@click.option("--x-lo", type=float, default=-4.0)
@click.option("--x-hi", type=float, default=20.0)
@click.option("--points", type=int, default=97)
@click.option("--tol", type=float, default=None)
@click.pass_context
@handle_errors
def semistable_cmd(ctx, gamma: float, j: Optional[int], kind: str, x_lo: float, x_hi: float, points: int, tol):
    """Tables of G_gamma, G_{j,gamma} and g_{j,gamma}."""
    spec = _spec(ctx, Command.SEMISTABLE, gamma=gamma, j=j, kind=kind, x_lo=x_lo, x_hi=x_hi, points=points, tol=tol)
    if kind in ("cdf", "pdf", "moments") and j is None:
        raise click.UsageError(f"--kind {kind} needs --j")
    if kind == "moments":
        mass, mean, var = semistable.moments_by_quadrature(j, gamma)
        exact_mean, exact_var = semistable.moments_Wj(j, gamma)
        click.echo(f"mass={mass:.8f} mean={mean:.8f} ({exact_mean:.8f}) var={var:.8f} ({exact_var:.8f})")
        return
    xs = np.linspace(x_lo, x_hi, points)
    if kind == "cdf":
        grid = semistable.cdf_Wj_grid(j, gamma, xs, spec.tol)
    elif kind == "pdf":
        grid = semistable.pdf_Wj_grid(j, gamma, xs, spec.tol)
    elif kind == "mixture":
        grid = semistable.cdf_W_mixture_grid(gamma, xs, spec.tol)
    else:
        grid = semistable.cdf_W_direct_grid(gamma, xs, spec.tol)
    suffix = f"_j{j}" if j is not None else ""
    write_csv(_out(spec, f"semistable_{kind}_g{gamma:g}{suffix}.csv"), ["x", "value", "quad_err"],
              semistable.export_rows(grid), "semistable", spec.params)


@cli.command()
@click.option("--kind", type=click.Choice(["max", "cond", "sum"]), default="max")
@click.option("--n-list", callback=_int_list, required=True, help="e.g. 64,128,256")
@click.option("--j", "j", type=int, default=0)
@click.option("--tol", type=float, default=None)
@click.pass_context
@handle_errors
def merge(ctx, kind: str, n_list: List[int], j: int, tol: Optional[float]):
    """Merging distances across a list of n."""
    spec = _spec(ctx, Command.MERGE, kind=kind, n_list=";".join(map(str, n_list)), j=j, tol=tol)
    rows = []
    for n in n_list:
        if kind == "max":
            rows.append([n, asymptotics.merge_distance_max(n), 0.0])
        elif kind == "cond":
            report = asymptotics.merge_distance_cond(n, j, spec.tol)
            rows.append([n, report.distance, report.allowance])
        else:
            report = asymptotics.merge_distance_sum(n, spec.tol)
            rows.append([n, report.distance, report.allowance])
        click.echo(f"n={n}: distance={rows[-1][1]:.6g} allowance={rows[-1][2]:.3g}")
    write_csv(_out(spec, f"merge_{kind}.csv"), ["n", "distance", "allowance"], rows, "merge", spec.params)


@cli.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--m", "m", type=int, default=16)
@click.option("--delta", type=float, default=0.1)
@click.option("--points", type=int, default=64)
@click.option("--mode", type=click.Choice(["restricted", "full", "finer", "max-ratio", "subexp", "oscillation"]),
              default="restricted")
@click.option("--c", "c", type=float, default=2.0)
@click.option("--ell-max", type=int, default=16)
@click.pass_context
@handle_errors
def tail(ctx, n: int, m: int, delta: float, points: int, mode: str, c: float, ell_max: int):
    """Tail-ratio scans over one dyadic period."""
    spec = _spec(ctx, Command.TAIL, n=n, m=m, delta=delta, points=points, mode=mode, c=c, ell_max=ell_max)
    if mode in ("finer", "max-ratio"):
        fn = asymptotics.finer_sup if mode == "finer" else asymptotics.max_ratio_sup
        sup_val, limit = fn(n, m, c, points)
        click.echo(f"sup={sup_val:.6f} limit={limit:.6f}")
        return
    if mode == "restricted":
        report = asymptotics.tail_ratio_scan(n, m, delta, points)
    elif mode == "full":
        report = asymptotics.full_period_scan(n, m, points)
    elif mode == "subexp":
        report = asymptotics.subexp_scan(n, ell_max)
    else:
        report = asymptotics.oscillation_scan(n, m, points)
    write_csv(_out(spec, f"tail_{mode}_n{n}.csv"), ["x", "statistic"], report.csv_rows(), "tail",
              spec.params, report.meta)
    click.echo(f"sup={report.sup_val:.6f} at {report.sup_at:.6g}, inf={report.inf_val:.6f} at {report.inf_at:.6g}")
    if "max_abs_dev" in report.meta:
        click.echo(f"max |r - 1| = {report.meta['max_abs_dev']:.6f}")


@cli.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--j-list", callback=_int_list, default="-2,-1,0,1,2")
@click.option("--points", type=int, default=50)
@click.option("--fig8/--no-fig8", default=False, help="Also check the mixture bound curve")
@click.pass_context
@handle_errors
def bounds(ctx, n: int, j_list: List[int], points: int, fig8: bool):
    """Chernoff/Cantelli domination over exact conditional tails."""
    spec = _spec(ctx, Command.BOUNDS, n=n, j_list=";".join(map(str, j_list)), points=points)
    violations = 0
    rows = []
    for j in j_list:
        report = asymptotics.bound_domination_scan(n, j, points)
        violations += report.meta["violations"]
        rows.extend([j, x, s] for x, s in report.points)
    if fig8:
        report = asymptotics.fig8_domination(n, min(j_list), max(j_list), np.linspace(-1.0, 15.0, 33))
        violations += report.meta["violations"]
    write_csv(_out(spec, f"bounds_n{n}.csv"), ["j", "x", "excess"], rows, "bounds", spec.params,
              {"violations": violations})
    click.echo(f"violations={violations}")
    if violations:
        sys.exit(EXIT_CHECK_FAILED)


@cli.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--reps", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--bins", type=int, default=200)
@click.pass_context
@handle_errors
def simulate(ctx, n: int, reps: int, seed: Optional[int], bins: int):
    """Monte Carlo samples of (S_n, X_n*) and the log2 S_n histogram."""
    seed = get_config().simulation.default_seed if seed is None else seed
    spec = _spec(ctx, Command.SIMULATE, n=n, reps=reps, seed=seed, bins=bins)
    table = montecarlo.simulate(SimConfig(n=n, reps=reps, seed=seed, bins=bins))
    header = {"seed": seed, "n": n, "reps": reps}
    write_csv(_out(spec, f"samples_n{n}.csv"), ["rep", "sum", "max"], table.csv_rows(), "simulate",
              spec.params, header)
    hist = montecarlo.log2_sum_histogram(table, bins)
    write_csv(_out(spec, f"histogram_n{n}.csv"), ["bin_left", "bin_right", "count", "density"],
              [[b.bin_left, b.bin_right, b.count, b.density] for b in hist], "simulate", spec.params, header)
    offsets = montecarlo.max_offset_report(table)
    write_csv(_out(spec, f"max_offsets_n{n}.csv"), ["j", "frequency", "q_exact", "p_limit", "band"],
              [[r["j"], r["frequency"], r["q_exact"], r["p_limit"], r["band"]] for r in offsets],
              "simulate", spec.params, header)
    outside = [r["j"] for r in offsets if not r["within"]]
    if outside:
        logger.warning(f"Maximum offsets outside the 4 sigma band: {outside}")
    click.echo(f"overflow_count={table.overflow_count}")


@cli.command()
@click.argument("names", nargs=-1)
@click.option("--gamma", type=float, default=1.0)
@click.option("--seed", type=int, default=None)
@click.option("--reps", type=int, default=100_000)
@click.pass_context
@handle_errors
def figures(ctx, names, gamma: float, seed: Optional[int], reps: int):
    """Data files of the figures and Table 1."""
    spec = _spec(ctx, Command.FIGURES, names=";".join(names), gamma=gamma, seed=seed, reps=reps)
    generator = FigureGenerator(out_dir=spec.out_dir, seed=seed, reps=reps)
    for path in generator.generate(list(names) or list(FIGURES), gamma=gamma):
        click.echo(str(path))


@cli.command()
@click.option("--suite", type=click.Choice(list(verification.SUITES)), default="primary")
@click.option("--tol", type=float, default=None)
@click.pass_context
@handle_errors
def verify(ctx, suite: str, tol: Optional[float]):
    """Acceptance suite with a JSON pass/fail summary."""
    spec = _spec(ctx, Command.VERIFY, suite=suite, tol=tol)
    results = verification.run_suite(suite, spec.tol, spec.out_dir)
    summary = [r.model_dump(include={"check_id", "status", "value", "tolerance"}, mode="json") for r in results]
    write_json(_out(spec, f"verify_{suite}.json"), summary)
    click.echo(json.dumps(summary, indent=2))
    if any(r.status is not CheckStatus.PASS for r in results):
        sys.exit(EXIT_CHECK_FAILED)


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(host: Optional[str], port: Optional[int]):
    """Serve the JSON API."""
    import uvicorn
    from src.api.main import app

    settings = get_config().api
    uvicorn.run(app, host=host or settings.host, port=port or settings.port)


if __name__ == "__main__":
    cli()
