"""Command-line entry point: ``gcr {gen,fit,oracle,bench,experiment}``.

Every command reads an optional JSON config; ``--seed`` overrides its
top-level ``seed`` key and ``--out`` names the output directory. Outputs
other than the benchmark timings are byte-identical for identical inputs.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, checks, io
from .affinity import save_affinity_csv
from .errors import GCRError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, summarize
from .pipeline import RunConfig, fit
from .synthdata import SynthSpec, generate

log = logging.getLogger("gcr")

ORACLE_CHECKS = ("logits", "enumeration", "quadrature", "rank1", "diagnostic", "map")


def _load(args) -> dict:
    cfg = io.read_json(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _provenance(cfg: dict) -> dict:
    return {"version": __version__, "seed": cfg.get("seed", 0), "config": cfg}


def cmd_gen(args) -> int:
    cfg = _load(args)
    spec = SynthSpec(**cfg)
    data, noisy = generate(spec, return_indices=True)
    out = io.ensure_dir(args.out)
    io.write_dataset_csv(out / "dataset.csv", data)
    io.write_json(out / "dataset.json", {**_provenance(spec.to_dict()),
                                         "noisy_indices": noisy, "N": data.N, "D": data.D})
    return 0


def _fit_data(cfg: dict):
    if "data" in cfg and "generator" in cfg:
        raise GCRError("give either 'data' or 'generator', not both")
    if "data" in cfg:
        return io.read_dataset_csv(cfg["data"])
    return generate(SynthSpec(**cfg.get("generator", {})))


def cmd_fit(args) -> int:
    cfg = _load(args)
    data = _fit_data(cfg)
    extra = {"data", "generator", "save_affinity"}
    run = RunConfig.from_dict({k: v for k, v in cfg.items() if k not in extra})
    res = fit(data, run, keep_affinity=bool(cfg.get("save_affinity", False)))
    out = io.ensure_dir(args.out)
    io.write_labels_csv(out / "labels.csv", res.labels)
    if cfg.get("save_affinity", False):
        save_affinity_csv(out / "affinity.csv", res.affinity)
    resolved = {**{k: cfg[k] for k in extra if k in cfg}, **run.to_dict()}
    io.write_json(out / "results.json", {
        **_provenance(resolved),
        "N": data.N, "D": data.D,
        "accuracy": res.accuracy,
        "init_accuracy": res.init_accuracy,
        "n_clusters_last_sample": res.n_clusters_last,
    })
    log.info("fit finished in %.2fs, accuracy=%s", res.wall_time, res.accuracy)
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args)
    seed = int(cfg.get("seed", 0))
    wanted = cfg.get("checks", list(ORACLE_CHECKS))
    unknown = set(wanted) - set(ORACLE_CHECKS)
    if unknown:
        raise GCRError(f"unknown checks {sorted(unknown)}")
    runners = {
        "logits": lambda: checks.logit_exactness(
            cfg.get("instances", 200), seed, cfg.get("max_N", 8), cfg.get("max_D", 4),
            cfg.get("max_K", 3)),
        "enumeration": lambda: checks.chain_vs_enumeration(
            seed, cfg.get("burn_in", 2000), cfg.get("retain", 20000)),
        "quadrature": lambda: checks.quadrature_draws(cfg.get("draws", 20), seed),
        "rank1": lambda: checks.rank1_trials(cfg.get("trials", 1000), seed),
        "diagnostic": lambda: checks.independence_diagnostic(seed=seed),
        "map": lambda: checks.map_ascent_property(cfg.get("map_instances", 100), seed),
    }
    reports = []
    for name in wanted:
        rep = runners[name]()
        reports.append(rep)
        print(f"{name}: {'pass' if rep['passed'] else 'FAIL'}"
              + (f" (max deviation {rep['max_deviation']:.3g} <= {rep['tolerance']:g})"
                 if "max_deviation" in rep else ""))
    out = io.ensure_dir(args.out)
    io.write_json(out / "oracle.json", {**_provenance({**cfg, "checks": wanted}),
                                        "reports": reports})
    return 0 if all(r["passed"] for r in reports) else 1


def cmd_bench(args) -> int:
    cfg = _load(args)
    rows = checks.bench_epochs(cfg.get("N", [50, 100, 200, 400]), cfg.get("D", 50),
                               cfg.get("K", 4), int(cfg.get("seed", 0)),
                               cfg.get("naive_max_N", 200), cfg.get("repeats", 3))
    out = io.ensure_dir(args.out)
    io.write_rows_csv(out / "bench.csv", ["N", "D", "K", "cached_epoch_s", "naive_epoch_s"],
                      [[r["N"], r["D"], r["K"], r["cached_s"],
                        "" if r["naive_s"] is None else r["naive_s"]] for r in rows])
    return 0


def cmd_experiment(args) -> int:
    cfg = _load(args)
    exp = ExperimentConfig.from_dict({**cfg, "name": args.name})
    records = run_experiment(exp, max(1, args.threads))
    rows = summarize(exp, records)
    out = io.ensure_dir(args.out)
    cols = ["experiment", "setting", "method", "runs", "mean_accuracy", "min_accuracy",
            "max_accuracy"]
    io.write_rows_csv(out / f"{exp.name}.csv", cols, [[r[c] for c in cols] for r in rows])
    run_cols = ["setting", "method", "repetition", "data_seed", "accuracy", "init_accuracy",
                "n_clusters_last"]
    io.write_rows_csv(out / f"{exp.name}_runs.csv", run_cols,
                      [[r[c] for c in run_cols] for r in records])
    io.write_json(out / f"{exp.name}.json", {**_provenance(exp.to_dict()), "summary": rows})
    for r in rows:
        print(f"{r['experiment']} setting={r['setting']} {r['method']}: "
              f"mean={r['mean_accuracy']:.4f} min={r['min_accuracy']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcr", description="Graph-free collapsed subspace clustering.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: available CPUs)")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name, fn, helptext in (
        ("gen", cmd_gen, "generate a synthetic dataset CSV"),
        ("fit", cmd_fit, "cluster a dataset"),
        ("oracle", cmd_oracle, "run the exactness oracles"),
        ("bench", cmd_bench, "time cached versus naive epochs"),
    ):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("experiment", help="run a synthetic accuracy study")
    sp.add_argument("name", choices=EXPERIMENTS)
    common(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GCRError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
