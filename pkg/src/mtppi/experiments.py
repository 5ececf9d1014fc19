"""Synthetic studies, the replication harness, and report emission.

The harness contract is determinism: a run is a pure function of
(study, config, master_seed). Each replication b draws every task's
labeled mask from the stream keyed (master_seed, task_index, b,
label-draw); per-cell work is independent, so replications may run on
any number of threads and the summary comes out byte-identical because
records are reduced in a fixed sorted order and floats are written with
shortest round-trip repr.

Two modes fall out of the data. When every item of every task carries
ground truth (synthetic studies), the per-task target mean is known and
the summary reports MSE, coverage, interval width and ratios against a
reference method. When only a label-eligible subset carries ground
truth (loaded CSVs), replications subsample that pool and the summary
reports interval widths only.

A failed cell (an estimator raising on a degenerate draw) is recorded
and excluded from averages, never fatal; the failure count is a column.
"""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import os
from typing import Mapping, Optional, Sequence

import numpy as np

from ._version import __version__
from .data import MultiTaskStudy, TaskDataset, validate_task_dataset
from .errors import (
    BadSpecError,
    ConfigInvalidError,
    IoError,
    MtppiError,
    ParseError,
    SchemaViolationError,
)
from .estimators import (
    MIN_LABELED,
    Method,
    areppi_estimate,
    classical_estimate,
    default_power_tune,
    greppi_estimate,
    ppi_estimate,
    ppipp_estimate,
    reppi_two_fold_estimate,
)
from .inference import wald_ci
from .recalibration import fit_global_recalibrator
from .sampling import Purpose, StreamKey, srs_without_replacement

__all__ = [
    "SyntheticSpec",
    "MethodSpec",
    "RunConfig",
    "CellRecord",
    "SummaryCell",
    "ReplicationSummary",
    "generate_synthetic_study",
    "load_semi_synthetic",
    "run_replications",
    "emit_reports",
    "read_summary_rows",
    "CSV_HEADER",
    "SUMMARY_HEADER",
]

CSV_HEADER = ["task_id", "item_id", "y_hat", "y", "label_eligible"]
SUMMARY_HEADER = ["task_id", "method", "n", "metric", "value"]
_METRIC_ORDER = (
    "mse",
    "coverage",
    "mean_ci_width",
    "rel_mse",
    "rel_width",
    "mc_se_mse",
    "n_failures",
)


@dataclasses.dataclass(frozen=True)
class SyntheticSpec:
    """Power-curve populations: Y = X^p + noise with X ~ U(0, 1), Yhat = X.

    Each task draws its own exponent p ~ U[p_min, p_max]; tasks are
    related but not identical, which is the regime the cross-task
    methods are built for.
    """

    n_tasks: int
    items_per_task: int
    p_min: float
    p_max: float
    noise_sd: float = 0.1
    x_law: str = "uniform01"
    seed: int = 0


@dataclasses.dataclass(frozen=True)
class MethodSpec:
    """One estimator to run; power_tune=None defers to the method default."""

    method: Method
    power_tune: Optional[bool] = None
    clip: bool = True


@dataclasses.dataclass(frozen=True)
class RunConfig:
    methods: tuple[MethodSpec, ...]
    label_budgets: tuple[int, ...]
    replications: int
    alpha: float = 0.05
    reference_method: Method = Method.PPI_PP
    k_folds: int = 5


@dataclasses.dataclass(frozen=True)
class CellRecord:
    """One (task, method, budget, replication) outcome."""

    task_index: int
    task_id: str
    method: Method
    n: int
    b: int
    theta_hat: Optional[float]
    lambda_used: Optional[float]
    width: Optional[float]
    sq_err: Optional[float]
    hit: Optional[bool]
    failed: bool
    error: Optional[str]


@dataclasses.dataclass(frozen=True)
class SummaryCell:
    task_id: str
    method: Method
    n: int
    mse: Optional[float]
    coverage: Optional[float]
    mean_ci_width: Optional[float]
    rel_mse: Optional[float]
    rel_width: Optional[float]
    mc_se_mse: Optional[float]
    n_failures: int


@dataclasses.dataclass(frozen=True)
class ReplicationSummary:
    cells: tuple[SummaryCell, ...]
    simulation_mode: bool
    manifest: dict
    records: Optional[tuple[CellRecord, ...]] = None


def generate_synthetic_study(spec: SyntheticSpec) -> MultiTaskStudy:
    """Materialize the synthetic population; fully labeled ground truth."""
    if spec.n_tasks < 1:
        raise BadSpecError("n_tasks must be >= 1")
    if spec.items_per_task < 2:
        raise BadSpecError("items_per_task must be >= 2")
    if not (0.0 < spec.p_min <= spec.p_max) or not np.isfinite(spec.p_max):
        raise BadSpecError(f"need 0 < p_min <= p_max, got [{spec.p_min}, {spec.p_max}]")
    if spec.noise_sd < 0.0 or not np.isfinite(spec.noise_sd):
        raise BadSpecError("noise_sd must be finite and >= 0")
    if spec.x_law != "uniform01":
        raise BadSpecError(f"unknown x_law {spec.x_law!r}")
    if spec.seed < 0:
        raise BadSpecError("seed must be non-negative")

    tasks = []
    for t in range(spec.n_tasks):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=spec.seed, spawn_key=(t,)))
        )
        p = rng.uniform(spec.p_min, spec.p_max)
        x = rng.uniform(size=spec.items_per_task)
        y = np.power(x, p)
        if spec.noise_sd > 0.0:
            y = y + rng.normal(0.0, spec.noise_sd, spec.items_per_task)
        task = TaskDataset(
            task_id=f"task{t:03d}",
            y_hat=x,
            y=y,
            labeled=np.ones(spec.items_per_task, dtype=bool),
        )
        tasks.append(validate_task_dataset(task))
    return MultiTaskStudy(tuple(tasks))


def load_semi_synthetic(path, bounded_scores: bool = False) -> MultiTaskStudy:
    """Read the task CSV schema: task_id,item_id,y_hat,y,label_eligible.

    ``y`` may be empty (unknown ground truth); ``label_eligible`` must be
    0 or 1 and an eligible row must carry a y value. With
    ``bounded_scores`` every score and label must lie in [0, 1].
    """
    by_task: dict[str, dict[str, list]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SchemaViolationError(
                f"bad header {header!r}; expected {CSV_HEADER!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"row {row_no}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            task_id, item_id, y_hat_s, y_s, elig_s = row
            if not task_id:
                raise SchemaViolationError(f"row {row_no}: empty task_id")
            try:
                y_hat = float(y_hat_s)
            except ValueError:
                raise ParseError(f"row {row_no}, column y_hat: {y_hat_s!r} is not a number") from None
            if y_s == "":
                y_val: Optional[float] = None
            else:
                try:
                    y_val = float(y_s)
                except ValueError:
                    raise ParseError(f"row {row_no}, column y: {y_s!r} is not a number") from None
            if elig_s not in ("0", "1"):
                raise SchemaViolationError(
                    f"row {row_no}, column label_eligible: {elig_s!r} must be 0 or 1"
                )
            eligible = elig_s == "1"
            if eligible and y_val is None:
                raise SchemaViolationError(
                    f"row {row_no}: label_eligible=1 but y is empty"
                )
            if bounded_scores:
                if not 0.0 <= y_hat <= 1.0:
                    raise SchemaViolationError(
                        f"row {row_no}: y_hat={y_hat} outside [0, 1] for bounded scores"
                    )
                if y_val is not None and not 0.0 <= y_val <= 1.0:
                    raise SchemaViolationError(
                        f"row {row_no}: y={y_val} outside [0, 1] for bounded scores"
                    )
            bucket = by_task.setdefault(task_id, {"y_hat": [], "y": [], "elig": []})
            bucket["y_hat"].append(y_hat)
            bucket["y"].append(np.nan if y_val is None else y_val)
            bucket["elig"].append(eligible)

    if not by_task:
        raise SchemaViolationError("file contains no data rows")
    tasks = []
    for task_id, cols in by_task.items():
        task = TaskDataset(
            task_id=task_id,
            y_hat=np.asarray(cols["y_hat"], dtype=float),
            y=np.asarray(cols["y"], dtype=float),
            labeled=np.asarray(cols["elig"], dtype=bool),
        )
        tasks.append(validate_task_dataset(task))
    return MultiTaskStudy(tuple(tasks))


def _resolve_power_tune(spec: MethodSpec, n: int) -> bool:
    if spec.method in (Method.CLASSICAL, Method.PPI):
        return False
    if spec.method is Method.PPI_PP:
        return True
    if spec.power_tune is None:
        return default_power_tune(spec.method, n)
    return spec.power_tune


def _validate_config(study: MultiTaskStudy, config: RunConfig) -> None:
    if not config.methods:
        raise ConfigInvalidError("no methods configured")
    if config.replications < 1:
        raise ConfigInvalidError("replications must be >= 1")
    if not 0.0 < config.alpha < 1.0:
        raise ConfigInvalidError(f"alpha={config.alpha} not in (0, 1)")
    if config.k_folds < 2:
        raise ConfigInvalidError("k_folds must be >= 2")
    if not config.label_budgets:
        raise ConfigInvalidError("no label budgets configured")
    names = [m.method for m in config.methods]
    if len(set(names)) != len(names):
        raise ConfigInvalidError("duplicate method in config")
    if config.reference_method not in names:
        raise ConfigInvalidError(
            f"reference method {config.reference_method.value} is not configured"
        )
    for ms in config.methods:
        if ms.method in (Method.CLASSICAL, Method.PPI) and ms.power_tune:
            raise ConfigInvalidError(f"{ms.method.value} cannot be power tuned")
        if ms.method is Method.PPI_PP and ms.power_tune is False:
            raise ConfigInvalidError("ppi_pp is power tuned by definition")
    needs_aux = any(ms.method in (Method.GREPPI, Method.AREPPI) for ms in config.methods)
    if needs_aux and study.n_tasks < 2:
        raise ConfigInvalidError("cross-task methods need at least 2 tasks")
    min_needed = max(MIN_LABELED[ms.method] for ms in config.methods)
    min_pool = min(t.n_labeled for t in study.tasks)
    for n in config.label_budgets:
        if n < min_needed:
            raise ConfigInvalidError(
                f"budget n={n} below the per-method minimum {min_needed}"
            )
        if n > min_pool:
            raise ConfigInvalidError(
                f"budget n={n} exceeds the smallest label pool ({min_pool})"
            )


def _estimate_one(
    ms: MethodSpec,
    task_b: TaskDataset,
    study_b: MultiTaskStudy,
    key: StreamKey,
    k_folds: int,
    global_fit,
):
    power = _resolve_power_tune(ms, task_b.n_labeled)
    m = ms.method
    if m is Method.CLASSICAL:
        return classical_estimate(task_b)
    if m is Method.PPI:
        return ppi_estimate(task_b)
    if m is Method.PPI_PP:
        return ppipp_estimate(task_b, clip=ms.clip)
    if m is Method.REPPI2:
        return reppi_two_fold_estimate(task_b, key, clip=ms.clip, power_tune=power)
    if m is Method.GREPPI:
        return greppi_estimate(task_b, study_b, power_tune=power, clip=ms.clip, global_fit=global_fit)
    if m is Method.AREPPI:
        return areppi_estimate(
            task_b,
            study_b,
            k_folds=k_folds,
            power_tune=power,
            clip=ms.clip,
            key=key,
            global_fit=global_fit,
        )
    raise ConfigInvalidError(f"unknown method {m!r}")


def _run_one_replication(
    study: MultiTaskStudy,
    pools: list[np.ndarray],
    theta_star: Optional[list[float]],
    config: RunConfig,
    master_seed: int,
    n: int,
    b: int,
) -> list[CellRecord]:
    tasks_b = []
    for t_idx, task in enumerate(study.tasks):
        key = StreamKey(master_seed, t_idx, b, Purpose.LABEL_DRAW)
        pool = pools[t_idx]
        picked = srs_without_replacement(key, pool.shape[0], n)
        mask = np.zeros(task.n_items, dtype=bool)
        mask[pool[picked]] = True
        tasks_b.append(task.with_labeled(mask))
    study_b = MultiTaskStudy(tuple(tasks_b))

    needs_aux = any(ms.method in (Method.GREPPI, Method.AREPPI) for ms in config.methods)
    records = []
    for t_idx, task_b in enumerate(study_b.tasks):
        global_fit = None
        global_err: Optional[str] = None
        if needs_aux:
            try:
                global_fit = fit_global_recalibrator(study_b, task_b.task_id)
            except MtppiError as exc:
                global_err = f"{type(exc).__name__}: {exc}"
        base_key = StreamKey(master_seed, t_idx, b, Purpose.LABEL_DRAW)
        for ms in config.methods:
            uses_aux = ms.method in (Method.GREPPI, Method.AREPPI)
            if uses_aux and global_err is not None:
                records.append(
                    CellRecord(t_idx, task_b.task_id, ms.method, n, b,
                               None, None, None, None, None, True, global_err)
                )
                continue
            try:
                result = _estimate_one(ms, task_b, study_b, base_key, config.k_folds, global_fit)
                ci = wald_ci(result.theta_hat, result.residuals, n, task_b.n_items, config.alpha)
            except MtppiError as exc:
                records.append(
                    CellRecord(t_idx, task_b.task_id, ms.method, n, b,
                               None, None, None, None, None, True,
                               f"{type(exc).__name__}: {exc}")
                )
                continue
            if theta_star is None:
                sq_err, hit = None, None
            else:
                target = theta_star[t_idx]
                err = result.theta_hat - target
                sq_err = err * err
                hit = bool(ci.lower <= target <= ci.upper)
            records.append(
                CellRecord(t_idx, task_b.task_id, ms.method, n, b,
                           result.theta_hat, result.lambda_used, ci.width,
                           sq_err, hit, False, None)
            )
    return records


def run_replications(
    study: MultiTaskStudy,
    config: RunConfig,
    master_seed: int,
    threads: int = 1,
    keep_records: bool = False,
) -> ReplicationSummary:
    """Monte Carlo over labeled-set draws; deterministic in (study, config, seed)."""
    _validate_config(study, config)
    if master_seed < 0:
        raise ConfigInvalidError("master_seed must be non-negative")
    simulation = study.has_full_ground_truth
    theta_star = [float(np.mean(t.y)) for t in study.tasks] if simulation else None
    pools = [t.labeled_indices for t in study.tasks]

    work = [(n, b) for n in config.label_budgets for b in range(config.replications)]

    def worker(item):
        n, b = item
        return _run_one_replication(study, pools, theta_star, config, master_seed, n, b)

    if threads and threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=int(threads)) as pool:
            batches = list(pool.map(worker, work))
    else:
        batches = [worker(item) for item in work]

    records = [rec for batch in batches for rec in batch]
    method_order = {ms.method: i for i, ms in enumerate(config.methods)}
    records.sort(key=lambda r: (r.task_index, method_order[r.method], r.n, r.b))

    cells = _aggregate(records, study, config, simulation)
    manifest = {
        "master_seed": int(master_seed),
        "replications": int(config.replications),
        "label_budgets": [int(n) for n in config.label_budgets],
        "alpha": float(config.alpha),
        "k_folds": int(config.k_folds),
        "reference_method": config.reference_method.value,
        "methods": [
            {
                "method": ms.method.value,
                "power_tune": ms.power_tune,
                "clip": bool(ms.clip),
            }
            for ms in config.methods
        ],
        "simulation_mode": simulation,
        "task_ids": [t.task_id for t in study.tasks],
    }
    return ReplicationSummary(
        cells=tuple(cells),
        simulation_mode=simulation,
        manifest=manifest,
        records=tuple(records) if keep_records else None,
    )


def _aggregate(
    records: list[CellRecord],
    study: MultiTaskStudy,
    config: RunConfig,
    simulation: bool,
) -> list[SummaryCell]:
    grouped: dict[tuple[int, Method, int], list[CellRecord]] = {}
    for rec in records:
        grouped.setdefault((rec.task_index, rec.method, rec.n), []).append(rec)

    raw: dict[tuple[int, Method, int], dict] = {}
    for key_, recs in grouped.items():
        ok = [r for r in recs if not r.failed]
        n_failures = len(recs) - len(ok)
        stats: dict = {"n_failures": n_failures}
        if ok:
            widths = np.asarray([r.width for r in ok])
            stats["mean_ci_width"] = float(np.mean(widths))
            if simulation:
                sq = np.asarray([r.sq_err for r in ok])
                stats["mse"] = float(np.mean(sq))
                stats["coverage"] = float(np.mean([r.hit for r in ok]))
                if sq.shape[0] >= 2:
                    stats["mc_se_mse"] = float(np.std(sq, ddof=1) / np.sqrt(sq.shape[0]))
        raw[key_] = stats

    cells = []
    for t_idx, task in enumerate(study.tasks):
        for ms in config.methods:
            for n in config.label_budgets:
                stats = raw.get((t_idx, ms.method, n), {"n_failures": 0})
                ref = raw.get((t_idx, config.reference_method, n), {})
                is_ref = ms.method is config.reference_method

                def ratio(name: str):
                    val = stats.get(name)
                    if val is None:
                        return None
                    if is_ref:
                        return 1.0
                    ref_val = ref.get(name)
                    if ref_val is None or ref_val == 0.0:
                        return None
                    return val / ref_val

                cells.append(
                    SummaryCell(
                        task_id=task.task_id,
                        method=ms.method,
                        n=n,
                        mse=stats.get("mse"),
                        coverage=stats.get("coverage"),
                        mean_ci_width=stats.get("mean_ci_width"),
                        rel_mse=ratio("mse"),
                        rel_width=ratio("mean_ci_width"),
                        mc_se_mse=stats.get("mc_se_mse"),
                        n_failures=stats["n_failures"],
                    )
                )
    return cells


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _summary_rows(summary: ReplicationSummary) -> list[dict]:
    rows = []
    for cell in summary.cells:
        for metric in _METRIC_ORDER:
            value = getattr(cell, metric)
            if value is None:
                continue
            rows.append(
                {
                    "task_id": cell.task_id,
                    "method": cell.method.value,
                    "n": cell.n,
                    "metric": metric,
                    "value": value,
                }
            )
    return rows


def emit_reports(
    summary: ReplicationSummary,
    out_dir,
    formats: Sequence[str] = ("csv", "json"),
    extra_manifest: Optional[Mapping] = None,
) -> dict[str, str]:
    """Write summary.csv / summary.json plus manifest.json to out_dir.

    Long format, one row per (task, method, n, metric); row order, float
    text and the manifest are all deterministic, and none of them depend
    on thread count or wall clock. Returns the written paths.
    """
    if not summary.cells:
        raise IoError("summary has no cells; nothing to write")
    formats = list(formats)
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise IoError(f"unknown report format(s): {sorted(unknown)}")
    os.makedirs(out_dir, exist_ok=True)
    rows = _summary_rows(summary)
    written: dict[str, str] = {}

    if "csv" in formats:
        path = os.path.join(out_dir, "summary.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER)
            for row in rows:
                writer.writerow(
                    [row["task_id"], row["method"], row["n"], row["metric"],
                     _format_value(row["value"])]
                )
        written["csv"] = path

    if "json" in formats:
        path = os.path.join(out_dir, "summary.json")
        payload = {
            "simulation_mode": summary.simulation_mode,
            "rows": [
                {
                    "task_id": r["task_id"],
                    "method": r["method"],
                    "n": int(r["n"]),
                    "metric": r["metric"],
                    "value": int(r["value"]) if r["metric"] == "n_failures" else float(r["value"]),
                }
                for r in rows
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["json"] = path

    manifest = {
        "library": "mtppi",
        "version": __version__,
        "run": summary.manifest,
    }
    if extra_manifest:
        manifest["extra"] = dict(extra_manifest)
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["manifest"] = manifest_path
    return written


def read_summary_rows(path) -> list[dict]:
    """Parse a summary.csv back into typed rows (exact float round-trip)."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise SchemaViolationError(f"bad summary header {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(SUMMARY_HEADER):
                raise ParseError(f"row {row_no}: wrong field count")
            task_id, method, n_s, metric, value_s = row
            try:
                n = int(n_s)
                value = int(value_s) if metric == "n_failures" else float(value_s)
            except ValueError:
                raise ParseError(f"row {row_no}: bad numeric field") from None
            rows.append(
                {"task_id": task_id, "method": method, "n": n, "metric": metric, "value": value}
            )
    return rows
