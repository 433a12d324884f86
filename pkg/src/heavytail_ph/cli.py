"""Command-line interface: fit, eval, compare, queue, simulate.

Every command writes its outputs into --out (default: current directory)
together with a manifest recording the resolved configuration, tool
version, seed, file digests, and wall-clock duration, sufficient to
reproduce the run.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, fitting, phmodel, queueing, simqueue
from . import targets as targets_mod
from .errors import (InvalidModelError, NonConvergenceError,
                     UnstableQueueError)
from .hybrid import hybrid_ccdf
from .optimizer import AdamConfig, EvalGrid, LossWeights

EXIT_CONFIG = 2
EXIT_FIT_FAILURE = 3
EXIT_NON_CONVERGENCE = 4


# -- shared helpers -------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


class Run:
    """Collects inputs/outputs and writes the manifest on completion."""

    def __init__(self, subcommand: str, config: dict, out_dir: str,
                 seed=None, inputs=()):
        self.subcommand = subcommand
        self.config = config
        self.seed = seed
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs = {str(p): _sha256(Path(p)) for p in inputs}
        self.outputs: dict[str, str] = {}
        self.started = time.monotonic()

    def write_json(self, name: str, doc) -> Path:
        path = self.out / name
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        self.outputs[str(path)] = _sha256(path)
        return path

    def write_csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        self.outputs[str(path)] = _sha256(path)
        return path

    def finish(self) -> None:
        manifest = {
            "format": 1,
            "subcommand": self.subcommand,
            "config": self.config,
            "version": __version__,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_s": round(time.monotonic() - self.started, 6),
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")


def _parse_window(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2:
        raise click.BadParameter("window must be 'x_min,x_max'")
    return tuple(parts)


def _parse_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise click.BadParameter("range must be 'x0:x1:steps'")
    return float(parts[0]), float(parts[1]), int(parts[2])


_TARGET_OPTIONS = [
    click.option("--target", "target_kind",
                 type=click.Choice(list(targets_mod.ANALYTIC_KINDS)),
                 help="Analytic target family."),
    click.option("--target-json", type=click.Path(exists=True, dir_okay=False),
                 help="Target specification as a JSON document."),
    click.option("--target-csv", type=click.Path(exists=True, dir_okay=False),
                 help="Tabulated target from a two-column (x, ccdf) CSV."),
    click.option("--shape", type=float, help="Pareto/Weibull shape."),
    click.option("--c", type=float, help="Burr parameter c."),
    click.option("--d", type=float, help="Burr parameter d."),
    click.option("--mu", type=float, help="Lognormal mu."),
    click.option("--sigma", type=float, help="Lognormal sigma."),
    click.option("--scale", type=float, help="Weibull scale."),
    click.option("--window", default=None,
                 help="Reference window 'x_min,x_max' (default 0,1e6)."),
]


def target_options(fn):
    for opt in reversed(_TARGET_OPTIONS):
        fn = opt(fn)
    return fn


def _resolve_target(target_kind, target_json, target_csv, shape, c, d, mu,
                    sigma, scale, window):
    window_t = _parse_window(window) if window else targets_mod.DEFAULT_WINDOW
    given = [bool(target_kind), bool(target_json), bool(target_csv)]
    if sum(given) != 1:
        raise click.UsageError(
            "specify exactly one of --target, --target-json, --target-csv")
    if target_json:
        return targets_mod.TargetDistribution.from_json(target_json), [target_json]
    if target_csv:
        return targets_mod.TargetDistribution.from_csv(
            target_csv, window=window_t), [target_csv]
    params_by_kind = {
        "pareto": {"shape": shape},
        "burr": {"c": c, "d": d},
        "lognormal": {"mu": mu, "sigma": sigma},
        "weibull": {"scale": scale, "shape": shape},
    }
    params = params_by_kind[target_kind]
    missing = [k for k, v in params.items() if v is None]
    if missing:
        raise click.UsageError(
            f"--target {target_kind} requires --" + ", --".join(missing))
    return targets_mod.TargetDistribution(kind=target_kind, params=params,
                                          window=window_t), []


_FIT_OPTIONS = [
    click.option("--method", type=click.Choice(["bph", "he", "bph_he"]),
                 default="bph_he", show_default=True),
    click.option("--k", type=int, default=fitting.DEFAULT_K, show_default=True,
                 help="Number of exponential tail terms."),
    click.option("--bph-order", "n", type=int, default=100, show_default=True,
                 help="Order of the Bernstein-PH body."),
    click.option("--grid-size", type=int, default=fitting.DEFAULT_GRID_SIZE,
                 show_default=True, help="Evaluation-grid size."),
    click.option("--grid-window", default=None,
                 help="Evaluation-grid span 'x0,x1' (default derived)."),
    click.option("--tail-window", default=None,
                 help="HE fit-point span 'x0,x1' (default derived)."),
    click.option("--weights", default="0.8,0.1,0.1", show_default=True,
                 help="Loss weights 'w_mae,w_lambda,w_p'."),
    click.option("--lr", type=float, default=0.01, show_default=True),
    click.option("--max-iters", type=int, default=500, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--no-optimize", is_flag=True,
                 help="Use the default fit points verbatim."),
    click.option("--no-adjust-mean", is_flag=True,
                 help="Skip the final rescale to the window-numeric mean."),
    click.option("--trace-csv", is_flag=True,
                 help="Also dump the optimizer loss trace as CSV."),
]


def fit_options(fn):
    for opt in reversed(_FIT_OPTIONS):
        fn = opt(fn)
    return fn


def _fit_config(target, method, k, n, grid_size, grid_window, tail_window,
                weights, lr, max_iters, no_optimize):
    w = [float(v) for v in weights.split(",")]
    if len(w) != 3:
        raise click.UsageError("--weights needs three comma-separated values")
    loss_weights = LossWeights(*w)
    adam = AdamConfig(learning_rate=lr, max_iters=max_iters)
    span = _parse_window(grid_window) if grid_window else None
    grid = fitting.default_grid(target, m=grid_size, span=span)
    # None defers fit-point placement to the library defaults.
    tail = _parse_window(tail_window) if tail_window else None
    return loss_weights, adam, grid, tail


def _run_fit(target, method, k, n, grid, tail, loss_weights, adam,
             no_optimize, adjust_mean=True):
    if method == "bph":
        return fitting.fit_bph(target, n=n, grid=grid,
                               adjust_mean=adjust_mean)
    if method == "he":
        points = fitting._pow2_points(2 * k - 1, *tail) if tail else None
        return fitting.fit_he(target, k=k, grid=grid, points=points,
                              adjust_mean=adjust_mean)
    from .optimizer import default_points
    init = default_points(k, *tail) if tail else None
    return fitting.fit_bph_he(target, k=k, n=n, grid=grid,
                              weights=loss_weights, adam=adam,
                              init_points=init,
                              run_optimizer=not no_optimize,
                              adjust_mean=adjust_mean)


# -- commands -------------------------------------------------------------

@click.group()
@click.version_option(__version__)
def main():
    """Fit heavy-tailed distributions with phase-type models and validate
    them analytically and by simulation in an M/PH/1 queue."""


@main.command("fit")
@target_options
@fit_options
@click.option("--out", default=".", show_default=True,
              help="Output directory.")
def cmd_fit(target_kind, target_json, target_csv, shape, c, d, mu, sigma,
            scale, window, method, k, n, grid_size, grid_window, tail_window,
            weights, lr, max_iters, seed, no_optimize, no_adjust_mean,
            trace_csv, out):
    """Fit a model and write model.json plus a fit report."""
    target, inputs = _resolve_target(target_kind, target_json, target_csv,
                                     shape, c, d, mu, sigma, scale, window)
    loss_weights, adam, grid, tail = _fit_config(
        target, method, k, n, grid_size, grid_window, tail_window, weights,
        lr, max_iters, no_optimize)
    config = {"target": target.to_dict(), "method": method, "k": k,
              "bph_order": n, "grid_size": grid_size,
              "grid_span": [float(grid.points[0]), float(grid.points[-1])],
              "tail_window": list(tail) if tail else None,
              "weights": [loss_weights.w_mae, loss_weights.w_lambda,
                          loss_weights.w_p],
              "lr": lr, "max_iters": max_iters, "no_optimize": no_optimize,
              "adjust_mean": not no_adjust_mean}
    run = Run("fit", config, out, seed=seed, inputs=inputs)
    try:
        outcome = _run_fit(target, method, k, n, grid, tail, loss_weights,
                           adam, no_optimize, adjust_mean=not no_adjust_mean)
    except InvalidModelError as exc:
        click.echo(f"fit failed: {exc}", err=True)
        sys.exit(EXIT_FIT_FAILURE)
    except NonConvergenceError as exc:
        click.echo(f"numerical non-convergence: {exc}", err=True)
        sys.exit(EXIT_NON_CONVERGENCE)

    outcome.model.save(run.out / "model.json")
    run.outputs[str(run.out / "model.json")] = _sha256(run.out / "model.json")
    run.write_json("report.json", outcome.report.to_dict())
    if trace_csv and outcome.trace:
        run.write_csv("loss_trace.csv",
                      ["iteration", "total", "mae", "pen_lambda", "pen_p"],
                      [(i, b.total, b.mae, b.pen_lambda, b.pen_p)
                       for i, b in enumerate(outcome.trace)])
    run.finish()
    click.echo(json.dumps(outcome.report.to_dict(), indent=2))


@main.command("eval")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", "grid_spec", default="0:10:200", show_default=True,
              help="Evaluation grid 'x0:x1:steps'.")
@click.option("--log-grid", is_flag=True, help="Log-spaced grid.")
@click.option("--out", default=".", show_default=True)
def cmd_eval(model_path, grid_spec, log_grid, out):
    """Tabulate (x, ccdf, cdf, pdf) for a saved model (and its target)."""
    try:
        model = phmodel.PhaseTypeModel.load(model_path)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"unreadable model: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    x0, x1, steps = _parse_range(grid_spec)
    if log_grid:
        if x0 <= 0:
            raise click.UsageError("log grid requires x0 > 0")
        xs = np.geomspace(x0, x1, steps)
    else:
        xs = np.linspace(x0, x1, steps)

    target = None
    if "source_target" in model.meta:
        target = targets_mod.TargetDistribution.from_dict(
            model.meta["source_target"])

    run = Run("eval", {"model": model_path, "grid": grid_spec,
                       "log_grid": log_grid}, out, inputs=[model_path])
    m_ccdf = phmodel.ccdf(model, xs)
    m_pdf = phmodel.pdf(model, xs)
    header = ["x", "ccdf", "cdf", "pdf"]
    cols = [xs, m_ccdf, 1.0 - m_ccdf, m_pdf]
    if target is not None:
        header += ["target_ccdf", "target_cdf", "target_pdf"]
        t_ccdf = np.array([targets_mod.ccdf(target, x) for x in xs])
        t_pdf = np.array([targets_mod.pdf(target, x) for x in xs])
        cols += [t_ccdf, 1.0 - t_ccdf, t_pdf]
    rows = [[f"{v:.12g}" for v in row] for row in zip(*cols)]
    run.write_csv("eval.csv", header, rows)
    run.finish()
    click.echo(str(run.out / "eval.csv"))


@main.command("compare")
@target_options
@fit_options
@click.option("--methods", default="bph,he,bph_he", show_default=True)
@click.option("--out", default=".", show_default=True)
def cmd_compare(target_kind, target_json, target_csv, shape, c, d, mu, sigma,
                scale, window, method, k, n, grid_size, grid_window,
                tail_window, weights, lr, max_iters, seed, no_optimize,
                no_adjust_mean, trace_csv, methods, out):
    """Fit several methods on one target and tabulate their statistics."""
    target, inputs = _resolve_target(target_kind, target_json, target_csv,
                                     shape, c, d, mu, sigma, scale, window)
    loss_weights, adam, grid, tail = _fit_config(
        target, method, k, n, grid_size, grid_window, tail_window, weights,
        lr, max_iters, no_optimize)
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    if not method_list:
        raise click.UsageError("--methods needs at least one method")

    run = Run("compare", {"target": target.to_dict(), "methods": method_list,
                          "k": k, "bph_order": n}, out, seed=seed,
              inputs=inputs)
    rows = []
    header = ["method", "mae", "mean_real", "mean_approx", "cv_real",
              "cv_approx"]
    for name in method_list:
        if name not in fitting.FIT_METHODS:
            raise click.UsageError(f"unknown method {name!r}")
        try:
            outcome = _run_fit(target, name, k, n, grid, tail, loss_weights,
                               adam, no_optimize,
                               adjust_mean=not no_adjust_mean)
            rep = outcome.report
            rows.append([name, f"{rep.mae:.6e}", f"{rep.mean_real:.6f}",
                         f"{rep.mean_approx:.6f}", f"{rep.cv_real:.6f}",
                         f"{rep.cv_approx:.6f}"])
        except (InvalidModelError, NonConvergenceError, ValueError) as exc:
            rows.append([name, "FAILED", str(exc), "", "", ""])
    run.write_csv("compare.csv", header, rows)
    widths = [max(len(str(r[i])) for r in [header] + rows)
              for i in range(len(header))]
    for row in [header] + rows:
        click.echo("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    run.finish()


@main.command("queue")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--lam", "--lambda", "lam", type=float, default=0.5,
              show_default=True, help="Poisson arrival rate.")
@click.option("--adjust-mean", type=float, default=None,
              help="Rescale the service model to this mean first.")
@click.option("--wait-grid", default=None, help="Waiting-time grid 'x0:x1:steps'.")
@click.option("--qlen-max", type=int, default=None,
              help="Tabulate P(N=n) up to this n.")
@click.option("--out", default=".", show_default=True)
def cmd_queue(model_path, lam, adjust_mean, wait_grid, qlen_max, out):
    """Analytic M/PH/1 metrics (and optional distribution curves)."""
    try:
        model = phmodel.PhaseTypeModel.load(model_path)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"unreadable model: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    run = Run("queue", {"model": model_path, "lam": lam,
                        "adjust_mean": adjust_mean, "wait_grid": wait_grid,
                        "qlen_max": qlen_max}, out, inputs=[model_path])
    try:
        if adjust_mean is not None:
            model = phmodel.scale_to_mean(model, adjust_mean)
        metrics = queueing.mph1_metrics(lam, model)
        run.write_json("metrics.json", metrics.to_dict())
        if wait_grid:
            x0, x1, steps = _parse_range(wait_grid)
            xs = np.linspace(x0, x1, steps)
            vals = queueing.waiting_time_ccdf(lam, model, xs)
            run.write_csv("wait_ccdf.csv", ["x", "ccdf"],
                          [(f"{x:.12g}", f"{v:.12g}") for x, v in zip(xs, vals)])
        if qlen_max is not None:
            probs = queueing.queue_length_dist(lam, model, qlen_max)
            run.write_csv("queue_length.csv", ["n", "probability"],
                          [(i, f"{p:.12g}") for i, p in enumerate(probs)])
    except UnstableQueueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    except NonConvergenceError as exc:
        click.echo(f"numerical non-convergence: {exc}", err=True)
        sys.exit(EXIT_NON_CONVERGENCE)
    run.finish()
    click.echo(json.dumps(metrics.to_dict(), indent=2))


@main.command("simulate")
@target_options
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Simulate a saved PH model instead of a target.")
@click.option("--lam", "--lambda", "lam", type=float, default=0.5,
              show_default=True)
@click.option("--jobs", type=int, default=2_000_000, show_default=True)
@click.option("--warmup", type=int, default=100_000, show_default=True)
@click.option("--replications", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--wait-grid", default=None, help="'x0:x1:steps'.")
@click.option("--qlen-max", type=int, default=50, show_default=True)
@click.option("--curves", is_flag=True, help="Also write empirical curves.")
@click.option("--out", default=".", show_default=True)
def cmd_simulate(target_kind, target_json, target_csv, shape, c, d, mu, sigma,
                 scale, window, model_path, lam, jobs, warmup, replications,
                 seed, wait_grid, qlen_max, curves, out):
    """Simulate the M/G/1 queue as an independent oracle."""
    inputs = []
    if model_path:
        model = phmodel.PhaseTypeModel.load(model_path)
        service = simqueue.model_service(model)
        source = {"model": model_path}
        inputs.append(model_path)
    else:
        target, inputs = _resolve_target(target_kind, target_json, target_csv,
                                         shape, c, d, mu, sigma, scale, window)
        service = simqueue.target_service(target)
        source = {"target": target.to_dict()}
    grid = ()
    if wait_grid:
        x0, x1, steps = _parse_range(wait_grid)
        grid = tuple(np.linspace(x0, x1, steps))
    config = simqueue.SimConfig(lam=lam, jobs=jobs, warmup=warmup, seed=seed,
                                replications=replications, wait_grid=grid,
                                qlen_max=qlen_max)
    run = Run("simulate", {**source, "lam": lam, "jobs": jobs,
                           "warmup": warmup, "replications": replications},
              out, seed=seed, inputs=inputs)
    result = simqueue.run_mg1(config, service)
    doc = result.to_dict()
    run.write_json("sim_metrics.json",
                   {"estimates": doc["estimates"], "unstable": doc["unstable"]})
    if curves:
        run.write_csv("sim_wait_ccdf.csv", ["x", "ccdf"],
                      [(f"{x:.12g}", f"{v:.12g}")
                       for x, v in zip(result.wait_grid, result.wait_ccdf)])
        run.write_csv("sim_queue_length.csv", ["n", "probability"],
                      [(i, f"{p:.12g}") for i, p in enumerate(result.qlen_pmf)])
    run.finish()
    click.echo(json.dumps(doc["estimates"], indent=2))


if __name__ == "__main__":
    main()
