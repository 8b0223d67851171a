"""Command-line entry point: ``mrsampler <command> --config PATH [flags]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from ..diagnostics import convergence_ratio, empirical_order, path_length, pca_fit
from ..predictor import ConstantNoise, DiracData, GaussianData, Parameterization, make_oracle
from ..process import RandomSource, reverse_terminal_moments
from ..sampler import Family, NumericalFailure, SamplerSpec, coarsen_noise, draw_noise, run, run_chains
from ..schedule import lambda_of_t
from .config import ConfigError, ExperimentConfig, load_config, parse_method

__all__ = ["main", "build_parser", "cmd_sample", "cmd_convergence_study", "cmd_compare_baselines", "cmd_trajectory", "cmd_radius_report"]

log = logging.getLogger("mrsampler.cli")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
COMPARE_HEADER = ["method", "nfe", "rmse", "terminal_mean_err", "terminal_var_err"]
ZERO_ERROR = 1e-10
# elements of a fine-grid noise block held in memory at once
_CHUNK_ELEMENTS = 4_000_000


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _predictor(cfg: ExperimentConfig):
    return make_oracle(cfg.schedule, cfg.oracle, cfg.oracle_output, dim=cfg.dim)


def _spec(cfg: ExperimentConfig, nfe: int | None = None, **overrides) -> SamplerSpec:
    try:
        return cfg.sampler_spec(nfe, **overrides)
    except ValueError as exc:
        raise ConfigError("sampler", str(exc)) from None


def _analytic_terminal(cfg: ExperimentConfig, t_end: float):
    if isinstance(cfg.oracle, DiracData):
        return reverse_terminal_moments(cfg.schedule, cfg.oracle.x0, cfg.mu, t_end)
    if isinstance(cfg.oracle, GaussianData):
        return reverse_terminal_moments(cfg.schedule, cfg.oracle.m0, cfg.mu, t_end, cfg.oracle.s0)
    return None


def _plot(cfg: ExperimentConfig, name: str, *args) -> list[Path]:
    if not cfg.plots:
        return []
    from . import figures

    return [getattr(figures, name)(cfg.out_dir, *args)]


def cmd_sample(cfg: ExperimentConfig) -> list[Path]:
    spec = _spec(cfg)
    start = time.perf_counter()
    traj = run_chains(spec, cfg.schedule, _predictor(cfg), cfg.mu, cfg.chains, workers=cfg.workers)
    wall = time.perf_counter() - start

    def rows():
        for c in range(cfg.chains):
            for i, (t, lam) in enumerate(zip(traj.times, traj.lambdas)):
                yield [c, i, t, lam, *traj.xs[i, c]]

    header = ["chain", "step", "t", "lambda"] + [f"x_{d}" for d in range(cfg.dim)]
    files = [write_csv(cfg.out_dir / "trajectories.csv", header, rows())]
    final = traj.final
    summary = {
        "method": spec.name,
        "nfe": traj.nfe,
        "chains": cfg.chains,
        "seed": cfg.seed,
        "t_end": float(traj.times[-1]),
        "wall_time_s": wall,
        "terminal_mean": final.mean(axis=0).tolist(),
        "terminal_var": final.var(axis=0, ddof=1 if cfg.chains > 1 else 0).tolist(),
    }
    analytic = _analytic_terminal(cfg, float(traj.times[-1]))
    if analytic is not None:
        summary["analytic_terminal_mean"] = analytic[0].tolist()
        summary["analytic_terminal_var"] = analytic[1].tolist()
    files.append(_write_json(cfg.out_dir / "summary.json", summary))
    files += _plot(cfg, "plot_sample", traj)
    return files


def _closed_form_available(cfg: ExperimentConfig) -> bool:
    """Order-1 MR steps are exact when the predictor is constant along the path."""
    if not cfg.family.is_mr:
        return False
    if cfg.parameterization is Parameterization.DATA:
        return isinstance(cfg.oracle, DiracData)
    return isinstance(cfg.oracle, ConstantNoise)


def convergence_errors(cfg: ExperimentConfig) -> tuple[list[tuple[int, float]], str]:
    """RMSE of each NFE in ``cfg.nfe_list`` against a reference on shared noise."""
    s, mu, pred = cfg.schedule, cfg.mu, _predictor(cfg)
    nfes = sorted(set(cfg.nfe_list))
    specs = {n: _spec(cfg, n) for n in nfes}
    closed = _closed_form_available(cfg)
    if closed:
        ref_spec = _spec(cfg, 1, order=1)
        label = "closed_form"
    else:
        ref_spec = _spec(cfg, cfg.reference_factor * max(nfes))
        label = f"same_solver_nfe_{ref_spec.grid.nfe}"
    fine_spec = ref_spec if not closed else _spec(cfg, int(np.lcm.reduce(nfes)))
    fine = fine_spec.grid
    if cfg.family.stochastic:
        try:
            for n in nfes:
                coarsen_noise(specs[n], s, fine, specs[n].grid, np.zeros((1, fine.nfe + 1, cfg.dim)))
        except ValueError as exc:
            raise ConfigError("study.nfe_list", f"NFE values must divide the reference grid: {exc}") from None

    rng = RandomSource(cfg.seed)
    sq = {n: 0.0 for n in nfes}
    chunk = max(1, _CHUNK_ELEMENTS // ((fine.nfe + 1) * cfg.dim))
    for lo in range(0, cfg.chains, chunk):
        n_chunk = min(chunk, cfg.chains - lo)
        fine_noise = draw_noise(rng, n_chunk, fine.nfe, cfg.dim, start=lo)
        if closed:
            ref_noise = coarsen_noise(ref_spec, s, fine, ref_spec.grid, fine_noise)
        else:
            ref_noise = fine_noise
        ref = run(ref_spec, s, pred, mu, chains=n_chunk, noise=ref_noise).final
        for n in nfes:
            noise = coarsen_noise(specs[n], s, fine, specs[n].grid, fine_noise)
            out = run(specs[n], s, pred, mu, chains=n_chunk, noise=noise).final
            sq[n] += float(np.sum((out - ref) ** 2))
    total = cfg.chains * cfg.dim
    return [(n, float(np.sqrt(sq[n] / total))) for n in nfes], label


def cmd_convergence_study(cfg: ExperimentConfig) -> list[Path]:
    errors, label = convergence_errors(cfg)
    log.info("convergence reference: %s", label)
    errs = np.array([e for _, e in errors])
    if len(errors) < 3 or np.all(errs < ZERO_ERROR) or np.any(errs <= 0):
        order = "n/a"
    else:
        order = empirical_order(errors)
    rows = [[n, e] for n, e in errors] + [["order", order]]
    files = [write_csv(cfg.out_dir / "order_study.csv", ["nfe", "rmse_vs_reference"], rows)]
    files += _plot(cfg, "plot_order_study", errors, order)
    return files


def compare_methods(order: int) -> list[str]:
    return [f"sde-n-{order}", f"ode-n-{order}", f"sde-d-{order}", f"ode-d-{order}", "posterior", "euler"]


def cmd_compare_baselines(cfg: ExperimentConfig) -> list[Path]:
    if isinstance(cfg.oracle, ConstantNoise):
        raise ConfigError("oracle.kind", "compare-baselines needs an analytic target (dirac or gaussian)")
    target = cfg.oracle.x0 if isinstance(cfg.oracle, DiracData) else cfg.oracle.m0
    s, pred = cfg.schedule, _predictor(cfg)
    rows = []
    for n in cfg.compare_nfe:
        for name in compare_methods(cfg.order):
            spec = _spec(cfg, n, **parse_method(name))
            try:
                final = run_chains(spec, s, pred, cfg.mu, cfg.chains, workers=cfg.workers).final
            except NumericalFailure as exc:
                log.warning("%s at NFE=%d diverged at step %d", name, n, exc.step)
                rows.append([name, n, float("nan"), float("nan"), float("nan")])
                continue
            mean_ref, var_ref = _analytic_terminal(cfg, float(spec.grid.times[-1]))
            err_mean = float(np.max(np.abs(final.mean(axis=0) - mean_ref)))
            var = final.var(axis=0, ddof=1 if cfg.chains > 1 else 0)
            err_var = float(np.max(np.abs(var - var_ref) / var_ref))
            rows.append([name, n, float(np.sqrt(np.mean((final - target) ** 2))), err_mean, err_var])
    files = [write_csv(cfg.out_dir / "compare.csv", COMPARE_HEADER, rows)]
    files += _plot(cfg, "plot_compare", rows)
    return files


def trajectory_projection(cfg: ExperimentConfig, methods=None):
    """Single-chain runs of ``methods`` projected on one PCA basis fitted to all their states."""
    if cfg.dim < 2:
        raise ConfigError("oracle", "trajectory projection needs D >= 2")
    methods = list(cfg.methods if methods is None else methods)
    s, pred = cfg.schedule, _predictor(cfg)
    states = {}
    for name in methods:
        spec = _spec(cfg, **parse_method(name))
        states[name] = run(spec, s, pred, cfg.mu).xs
    basis = pca_fit(np.concatenate(list(states.values()), axis=0))
    return {name: basis.project(xs) for name, xs in states.items()}, basis


def cmd_trajectory(cfg: ExperimentConfig) -> list[Path]:
    proj, basis = trajectory_projection(cfg)
    rows = [[name, i, p[0], p[1]] for name, pts in proj.items() for i, p in enumerate(pts)]
    files = [write_csv(cfg.out_dir / "trajectory_2d.csv", ["method", "step", "pc1", "pc2"], rows)]
    files.append(
        _write_json(
            cfg.out_dir / "trajectory_summary.json",
            {
                "explained_variance": list(basis.explained_variance),
                "path_length": {name: path_length(pts) for name, pts in proj.items()},
                "nfe": cfg.nfe,
                "seed": cfg.seed,
            },
        )
    )
    files += _plot(cfg, "plot_trajectory", proj)
    return files


def radius_rows(cfg: ExperimentConfig, kind: Parameterization) -> list[list]:
    family = cfg.family if cfg.family.is_mr else Family.MR_SDE
    spec = _spec(cfg, family=family, parameterization=kind)
    traj = run_chains(spec, cfg.schedule, _predictor(cfg), cfg.mu, cfg.chains, workers=cfg.workers)
    rep = convergence_ratio(traj)
    lams = lambda_of_t(cfg.schedule, rep.times)
    return [[int(k), t, lam, h, r] for k, t, lam, h, r in zip(rep.steps, rep.times, np.atleast_1d(lams), rep.h_values, rep.per_step_ratio)]


def cmd_radius_report(cfg: ExperimentConfig) -> list[Path]:
    files, reports = [], {}
    for kind in cfg.radius_kinds:
        rows = radius_rows(cfg, kind)
        reports[kind.value] = rows
        files.append(write_csv(cfg.out_dir / f"radius_{kind.value}.csv", ["step", "t", "lambda", "h", "ratio"], rows))
    files += _plot(cfg, "plot_radius", reports)
    return files


COMMANDS = {
    "sample": cmd_sample,
    "convergence-study": cmd_convergence_study,
    "compare-baselines": cmd_compare_baselines,
    "trajectory": cmd_trajectory,
    "radius-report": cmd_radius_report,
}


HELP = {
    "sample": "run chains and dump trajectories.csv + summary.json",
    "convergence-study": "RMSE against a reference over an NFE list (order_study.csv)",
    "compare-baselines": "MR samplers vs posterior sampling and Euler-Maruyama (compare.csv)",
    "trajectory": "single-chain paths in a shared PCA basis (trajectory_2d.csv)",
    "radius-report": "per-step Taylor convergence ratio (radius_<kind>.csv)",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, metavar="U64", help="override sampler.seed")
    common.add_argument("--out", metavar="DIR", help="override outputs.dir")
    common.add_argument("--nfe", metavar="LIST", help="comma-separated NFE values; the first also sets sampler.nfe")
    common.add_argument("--workers", type=int, metavar="N", help="override worker count")
    common.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    parser = argparse.ArgumentParser(prog="mrsampler", description="Fast samplers for mean-reverting diffusion on analytic oracles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def _configure_logging() -> None:
    level = os.environ.get("MRSDE_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if level not in levels:
        logging.getLogger("mrsampler").error("MRSDE_LOG=%r not understood; using error", level)


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "out": args.out, "nfe": args.nfe, "workers": args.workers, "plots": args.plot}
    try:
        cfg = load_config(args.config, overrides)
        files = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} (step {exc.step})", file=sys.stderr)
        return EXIT_NUMERIC
    except ImportError as exc:
        print(f"missing optional dependency: {exc}; install the 'plot' extra", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        log.info("wrote %s", f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
