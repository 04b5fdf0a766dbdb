"""Command-line entry point: ``npglm simulate | fit | summarize``.

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ChainAborted, FormatError, InvalidParameter, SchemaError, ShapeMismatch
from .gibbs import ChainConfig, run_chain
from .io import (
    CHAIN_KEYS,
    read_dataset,
    read_draws,
    read_spec_file,
    model_spec_from_settings,
    write_dataset,
    write_draws,
    write_matrix,
    write_table,
)
from .simulation import ScenarioTruth, evaluate, generate_dataset, generate_truth, write_metric_table
from .summaries import (
    cluster_summary,
    diagnostics,
    functional_summary,
    hpd_interval,
    occupied_clusters,
    summarize_coefficients,
    trace_columns,
)

logger = logging.getLogger("npglm")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
SUMMARY_TARGETS = ("beta", "f", "clusters", "trace", "diagnostics", "metrics")


def _default_seed():
    value = os.environ.get("NPGLM_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise SchemaError(f"NPGLM_SEED must be an integer, got {value!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="npglm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic scenario dataset")
    sim.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", type=Path, required=True)

    fit = sub.add_parser("fit", help="run the Gibbs sampler on a CSV dataset")
    fit.add_argument("data", type=Path)
    fit.add_argument("--spec", type=Path, help="key = value settings file")
    fit.add_argument("--seed", type=int)
    fit.add_argument("--iterations", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--truncation", type=int)
    fit.add_argument("--kappa", type=float)
    fit.add_argument("--intercepts", choices=("dp", "gaussian", "none"))
    fit.add_argument("--functional", choices=("gp", "parabolic", "none"))
    fit.add_argument("--covariates", choices=("survey", "simulation"))
    fit.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    fit.add_argument("--out", type=Path, required=True)

    summ = sub.add_parser("summarize", help="rebuild summaries from a draws file")
    summ.add_argument("draws", type=Path)
    summ.add_argument("--targets", default="beta",
                      help=f"comma-separated subset of {','.join(SUMMARY_TARGETS)}")
    summ.add_argument("--level", type=int, help="level value for the f target (default: all)")
    summ.add_argument("--truth", type=Path, help="truth file for the metrics target")
    summ.add_argument("--out", type=Path)
    return parser


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_simulate(args):
    seed = _default_seed() if args.seed is None else args.seed
    args.out.mkdir(parents=True, exist_ok=True)
    truth = generate_truth(args.scenario, seed)
    dataset = generate_dataset(truth)
    write_dataset(dataset, args.out / "data.csv")
    _write_json(args.out / "truth.json", truth.to_dict())
    _write_json(args.out / "manifest.json", {
        "command": "simulate",
        "version": __version__,
        "scenario": args.scenario,
        "seed": seed,
        "n": dataset.n,
        "data_sha256": _digest(args.out / "data.csv"),
    })
    return EXIT_OK


def _settings(args):
    settings = {"iterations": 5000, "burnin": 2000, "thin": 1, "seed": _default_seed()}
    if args.spec is not None:
        settings.update(read_spec_file(args.spec))
    for key in ("seed", "iterations", "burnin", "thin", "truncation", "intercepts",
                "functional", "covariates"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.kappa is not None:
        settings["kappa"] = [args.kappa]
    return settings


def _write_summaries(draws, out, targets, level=None, truth=None):
    written = []
    if "beta" in targets:
        rows = summarize_coefficients(draws)
        write_table(out / "coefficients.csv", ["name", "mean", "median", "se", "hpd_lo", "hpd_hi"],
                    [[r["name"], r["mean"], r["median"], r["se"], r["hpd_lo"], r["hpd_hi"]]
                     for r in rows])
        written.append("coefficients.csv")
    if "f" in targets and draws.functional_mode != "none":
        levels = draws.levels if level is None else (level,)
        for lev in levels:
            if lev not in draws.levels:
                raise SchemaError(f"unknown level {lev}; draws have levels {draws.levels}")
            band = functional_summary(draws, draws.levels.index(lev))
            write_matrix(out / f"f{lev}.csv", ["grid", "mean", "lo", "hi"], band)
            written.append(f"f{lev}.csv")
    if "clusters" in targets and draws.intercept_mode == "dp":
        co, mu = cluster_summary(draws)
        G = co.shape[0]
        write_matrix(out / "coclustering.csv", [f"group.{i + 1}" for i in range(G)], co)
        rows = []
        for i in range(G):
            lo, hi = hpd_interval(mu[:, i]) if mu.shape[0] >= 20 else (mu[:, i].min(), mu[:, i].max())
            rows.append([i + 1, mu[:, i].mean(), np.median(mu[:, i]), lo, hi])
        write_table(out / "intercepts.csv", ["group", "mean", "median", "hpd_lo", "hpd_hi"], rows)
        counts = np.bincount(occupied_clusters(draws.S))
        write_table(out / "cluster_counts.csv", ["clusters", "frequency"],
                    [[k, c / draws.n_draws] for k, c in enumerate(counts) if c])
        written += ["coclustering.csv", "intercepts.csv", "cluster_counts.csv"]
    if "trace" in targets:
        names, matrix = trace_columns(draws)
        write_matrix(out / "trace.csv", names, matrix)
        written.append("trace.csv")
    if "diagnostics" in targets:
        rows = diagnostics(draws)
        write_table(out / "diagnostics.csv", ["name", "mean", "sd", "ess", "lag1"],
                    [[r["name"], r["mean"], r["sd"], r["ess"], r["lag1"]] for r in rows])
        written.append("diagnostics.csv")
    if "metrics" in targets:
        if truth is None:
            raise SchemaError("the metrics target needs --truth")
        label = f"{draws.functional_mode}-{draws.intercept_mode}"
        write_metric_table({label: evaluate(draws, truth)}, out / "metrics.csv")
        written.append("metrics.csv")
    return written


def _limit_threads(n):
    if n is None:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def cmd_fit(args):
    settings = _settings(args)
    dataset, covariates = read_dataset(args.data, settings.get("covariates"))
    spec = model_spec_from_settings(settings, dataset.p)
    config = ChainConfig(iterations=settings["iterations"], burn_in=settings["burnin"],
                         thin=settings["thin"], seed=settings["seed"])
    spec.check(dataset)
    args.out.mkdir(parents=True, exist_ok=True)
    limiter = _limit_threads(args.threads)
    start = time.perf_counter()
    try:
        draws = run_chain(dataset, spec, config)
    except ChainAborted as exc:
        state = exc.state
        _write_json(args.out / "aborted.json", {
            "iteration": exc.iteration,
            "error": str(exc),
            "last_state": {
                "beta": state.beta.tolist(),
                "theta": state.theta.tolist(),
                "sigma_inv": state.sigma_inv,
                "alpha": state.alpha,
            },
        })
        raise
    finally:
        if limiter is not None:
            limiter.unregister()
    elapsed = time.perf_counter() - start

    write_draws(draws, args.out / "draws.csv")
    written = _write_summaries(draws, args.out, ("beta", "f", "clusters", "trace", "diagnostics"))
    _write_json(args.out / "manifest.json", {
        "command": "fit",
        "version": __version__,
        "data": str(args.data),
        "data_sha256": _digest(args.data),
        "dataset_digest": dataset.digest(),
        "covariates": covariates,
        "spec": draws.metadata["spec"],
        "config": draws.metadata["config"],
        "seed": config.seed,
        "threads": args.threads,
        "outputs": ["draws.csv"] + written,
        "wall_clock_seconds": elapsed,
    })
    return EXIT_OK


def cmd_summarize(args):
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    unknown = [t for t in targets if t not in SUMMARY_TARGETS]
    if unknown:
        raise SchemaError(f"unknown target(s): {', '.join(unknown)}")
    draws = read_draws(args.draws)
    truth = None
    if args.truth is not None:
        truth = ScenarioTruth.from_dict(json.loads(args.truth.read_text(encoding="utf-8")))
    out = args.out or args.draws.parent
    out.mkdir(parents=True, exist_ok=True)
    _write_summaries(draws, out, targets, level=args.level, truth=truth)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "summarize": cmd_summarize}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, FormatError, InvalidParameter, ShapeMismatch) as exc:
        print(f"npglm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ChainAborted as exc:
        print(f"npglm {args.command}: chain aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"npglm {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
