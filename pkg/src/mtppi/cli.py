"""Command line entry points.

Subcommands:
  synthetic   generate a synthetic study and run the replication harness
  estimate    estimate task means from a CSV (single shot or replicated)
  verify      run the theory property checks against their oracles
  report      re-emit an existing summary.csv as summary.json

Shared flags: --config <json>, --seed <u64>, --out <dir>, --threads <n>,
and repeated --set key=value dotted-path overrides applied on top of the
config file. Thread count falls back to the PPI_MT_THREADS environment
variable. Exit codes: 0 success, 1 usage or config error, 2 data error,
3 property-check failure.
"""
from __future__ import annotations

import argparse
import csv as _csv
import dataclasses
import json
import os
import sys
from typing import Optional

from .checks import run_all
from .errors import (
    BadAlphaError,
    BadKError,
    BadSpecError,
    ConfigInvalidError,
    IoError,
    MtppiError,
)
from .estimators import MIN_LABELED, Method
from .experiments import (
    MethodSpec,
    RunConfig,
    SyntheticSpec,
    _estimate_one,
    emit_reports,
    generate_synthetic_study,
    load_semi_synthetic,
    read_summary_rows,
    run_replications,
)
from .inference import wald_ci
from .recalibration import fit_global_recalibrator
from .sampling import Purpose, StreamKey

_CONFIG_ERRORS = (ConfigInvalidError, BadSpecError, BadAlphaError, BadKError, IoError)

ESTIMATES_HEADER = [
    "task_id", "method", "n", "theta_hat", "lambda_used", "se",
    "ci_lower", "ci_upper", "ci_level",
]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mtppi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synthetic", "run the synthetic-study replication harness"),
        ("estimate", "estimate from a task CSV"),
        ("verify", "check the variance theory against its oracles"),
        ("report", "convert a summary.csv to summary.json"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="master seed (u64)")
        p.add_argument("--out", default="mtppi_out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: PPI_MT_THREADS or 1)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       dest="overrides", help="config override, dotted key path")
    return parser


def _resolve_threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("PPI_MT_THREADS")
        if env is None:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ConfigInvalidError(f"PPI_MT_THREADS={env!r} is not an integer") from None
    if n < 1:
        raise ConfigInvalidError(f"thread count must be >= 1, got {n}")
    return n


def _load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalidError(f"config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigInvalidError("config root must be a JSON object")
    for item in args.overrides:
        if "=" not in item:
            raise ConfigInvalidError(f"--set needs KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigInvalidError(f"--set {key}: {part!r} is not an object")
            node = nxt
        node[parts[-1]] = value
    return cfg


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigInvalidError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _parse_method_entry(entry) -> MethodSpec:
    if isinstance(entry, str):
        name, extras = entry, {}
    elif isinstance(entry, dict):
        _reject_unknown(entry, {"name", "power_tune", "clip"}, "method entry")
        if "name" not in entry:
            raise ConfigInvalidError(f"method entry missing 'name': {entry!r}")
        name, extras = entry["name"], entry
    else:
        raise ConfigInvalidError(f"bad method entry: {entry!r}")
    try:
        method = Method(name)
    except ValueError:
        raise ConfigInvalidError(
            f"unknown method {name!r}; expected one of "
            f"{[m.value for m in Method]}"
        ) from None
    power = extras.get("power_tune")
    if power is not None and not isinstance(power, bool):
        raise ConfigInvalidError(f"power_tune must be boolean, got {power!r}")
    clip = extras.get("clip", True)
    if not isinstance(clip, bool):
        raise ConfigInvalidError(f"clip must be boolean, got {clip!r}")
    return MethodSpec(method=method, power_tune=power, clip=clip)


def _parse_run_section(cfg: dict, require_replication: bool):
    run = cfg.get("run")
    if not isinstance(run, dict):
        raise ConfigInvalidError("config needs a 'run' object")
    _reject_unknown(
        run,
        {"methods", "label_budgets", "replications", "alpha",
         "reference_method", "k_folds"},
        "run",
    )
    if "methods" not in run or not run["methods"]:
        raise ConfigInvalidError("run.methods must be a non-empty list")
    methods = tuple(_parse_method_entry(e) for e in run["methods"])
    alpha = float(run.get("alpha", 0.05))
    k_folds = int(run.get("k_folds", 5))
    has_budgets = "label_budgets" in run or "replications" in run
    if require_replication and not has_budgets:
        raise ConfigInvalidError("run.label_budgets and run.replications are required")
    if not has_budgets:
        return methods, alpha, k_folds, None
    if "label_budgets" not in run or "replications" not in run:
        raise ConfigInvalidError(
            "label_budgets and replications must be configured together"
        )
    budgets = tuple(int(n) for n in run["label_budgets"])
    replications = int(run["replications"])
    names = [ms.method for ms in methods]
    if "reference_method" in run:
        try:
            reference = Method(run["reference_method"])
        except ValueError:
            raise ConfigInvalidError(
                f"unknown reference_method {run['reference_method']!r}"
            ) from None
    elif Method.PPI_PP in names:
        reference = Method.PPI_PP
    else:
        reference = names[0]
    config = RunConfig(
        methods=methods,
        label_budgets=budgets,
        replications=replications,
        alpha=alpha,
        reference_method=reference,
        k_folds=k_folds,
    )
    return methods, alpha, k_folds, config


def _format(value) -> str:
    return repr(float(value))


def cmd_synthetic(args) -> int:
    cfg = _load_config(args)
    _reject_unknown(cfg, {"synthetic", "run"}, "config")
    syn = cfg.get("synthetic")
    if not isinstance(syn, dict):
        raise ConfigInvalidError("config needs a 'synthetic' object")
    _reject_unknown(
        syn,
        {"n_tasks", "items_per_task", "p_min", "p_max", "p_ranges",
         "noise_sd", "x_law", "seed"},
        "synthetic",
    )
    threads = _resolve_threads(args)
    _, _, _, run_config = _parse_run_section(cfg, require_replication=True)

    if "p_ranges" in syn:
        if "p_min" in syn or "p_max" in syn:
            raise ConfigInvalidError("give either p_ranges or p_min/p_max, not both")
        ranges = [(float(lo), float(hi)) for lo, hi in syn["p_ranges"]]
    else:
        if "p_min" not in syn or "p_max" not in syn:
            raise ConfigInvalidError("synthetic needs p_min and p_max (or p_ranges)")
        ranges = [(float(syn["p_min"]), float(syn["p_max"]))]

    multi = len(ranges) > 1
    for lo, hi in ranges:
        spec = SyntheticSpec(
            n_tasks=int(syn.get("n_tasks", 4)),
            items_per_task=int(syn.get("items_per_task", 186)),
            p_min=lo,
            p_max=hi,
            noise_sd=float(syn.get("noise_sd", 0.1)),
            x_law=str(syn.get("x_law", "uniform01")),
            seed=int(syn.get("seed", args.seed)),
        )
        study = generate_synthetic_study(spec)
        summary = run_replications(study, run_config, args.seed, threads=threads)
        out_dir = os.path.join(args.out, f"p{lo:g}-{hi:g}") if multi else args.out
        written = emit_reports(
            summary, out_dir, extra_manifest={"synthetic": dataclasses.asdict(spec)}
        )
        print(f"wrote {written['csv']}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    _reject_unknown(cfg, {"input", "bounded_scores", "run"}, "config")
    if "input" not in cfg:
        raise ConfigInvalidError("config needs 'input': path to the task CSV")
    bounded = cfg.get("bounded_scores", False)
    if not isinstance(bounded, bool):
        raise ConfigInvalidError("bounded_scores must be boolean")
    methods, alpha, k_folds, run_config = _parse_run_section(cfg, require_replication=False)
    threads = _resolve_threads(args)
    study = load_semi_synthetic(cfg["input"], bounded_scores=bounded)

    if run_config is not None:
        summary = run_replications(study, run_config, args.seed, threads=threads)
        written = emit_reports(summary, args.out, extra_manifest={"input": cfg["input"]})
        print(f"wrote {written['csv']}")
        return 0

    # single shot: each task's eligible labels are the labeled set
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "estimates.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(ESTIMATES_HEADER)
        for t_idx, task in enumerate(study.tasks):
            needs_aux = any(ms.method in (Method.GREPPI, Method.AREPPI) for ms in methods)
            global_fit = (
                fit_global_recalibrator(study, task.task_id) if needs_aux else None
            )
            key = StreamKey(args.seed, t_idx, 0, Purpose.LABEL_DRAW)
            for ms in methods:
                if task.n_labeled < MIN_LABELED[ms.method]:
                    raise ConfigInvalidError(
                        f"task {task.task_id}: {task.n_labeled} labels < "
                        f"{ms.method.value} minimum {MIN_LABELED[ms.method]}"
                    )
                result = _estimate_one(ms, task, study, key, k_folds, global_fit)
                ci = wald_ci(result.theta_hat, result.residuals,
                             result.n_labeled, task.n_items, alpha)
                writer.writerow([
                    task.task_id, ms.method.value, result.n_labeled,
                    _format(result.theta_hat), _format(result.lambda_used),
                    _format(ci.se), _format(ci.lower), _format(ci.upper),
                    _format(ci.level),
                ])
    print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    results = run_all(args.seed)
    failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: max deviation {res.max_deviation:.3e} "
              f"(tolerance {res.tolerance:.1e})")
        failed = failed or not res.passed
    return 3 if failed else 0


def cmd_report(args) -> int:
    cfg = _load_config(args)
    _reject_unknown(cfg, {"input"}, "config")
    if "input" not in cfg:
        raise ConfigInvalidError("config needs 'input': path to a summary.csv")
    rows = read_summary_rows(cfg["input"])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"rows": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "synthetic": cmd_synthetic,
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (MtppiError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
