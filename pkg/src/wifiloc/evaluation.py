"""Localization metrics, density ablation and ground-truth consistency.

Error metrics: the per-sample error is the 2D Euclidean distance between
predicted and true position. MAE is the mean of those distances; RMSE is
the root of the mean of their squares, so RMSE >= MAE always, with equality
only when every error is the same.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import FingerprintDataset
from .localizer import TrainConfig, predict_dataset, train

DEFAULT_STRATIFY_CELL_M = 0.66


@dataclass(frozen=True)
class EvalReport:
    """Position-error summary for one evaluation run."""

    rmse: float
    mae: float
    n_test: int
    rp_count: int
    rp_per_m2: float
    per_sample_errors: tuple[float, ...]


@dataclass(frozen=True)
class AblationRow:
    fraction: float
    rp_count: int
    mean_mae: float


def metrics(
    predictions: Sequence[tuple[float, float]] | np.ndarray,
    truths: Sequence[tuple[float, float]] | np.ndarray,
    rp_count: int = 0,
    area_m2: float = 0.0,
) -> EvalReport:
    """RMSE/MAE over per-sample Euclidean errors.

    rp_count and area_m2 are bookkeeping for the report (how many reference
    points trained the model, over what area); pass them when known.
    """
    pred = np.asarray(predictions, dtype=np.float64)
    true = np.asarray(truths, dtype=np.float64)
    if pred.shape != true.shape or pred.ndim != 2 or pred.shape[1] != 2:
        raise ValueError("predictions and truths must both be (n, 2)")
    if pred.shape[0] == 0:
        raise ValueError("cannot compute metrics on zero samples")
    errors = np.linalg.norm(pred - true, axis=1)
    return EvalReport(
        rmse=float(np.sqrt(np.mean(errors**2))),
        mae=float(np.mean(errors)),
        n_test=int(pred.shape[0]),
        rp_count=rp_count,
        rp_per_m2=rp_count / area_m2 if area_m2 > 0 else 0.0,
        per_sample_errors=tuple(float(e) for e in errors),
    )


def report_to_text(report: EvalReport) -> str:
    """Aligned-column plain text rendering of an EvalReport."""
    lines = [
        "localization error report (per-sample error = 2D Euclidean distance)",
        f"  {'RMSE':<10} {report.rmse:.4f} m",
        f"  {'MAE':<10} {report.mae:.4f} m",
        f"  {'n_test':<10} {report.n_test}",
        f"  {'rp_count':<10} {report.rp_count}",
        f"  {'rp_per_m2':<10} {report.rp_per_m2:.4f}",
    ]
    return "\n".join(lines)


def report_to_json(report: EvalReport) -> str:
    doc = {
        "error_definition": "euclidean_2d",
        "rmse_m": report.rmse,
        "mae_m": report.mae,
        "n_test": report.n_test,
        "rp_count": report.rp_count,
        "rp_per_m2": report.rp_per_m2,
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def split_train_test(
    ds: FingerprintDataset, test_fraction: float, seed: int
) -> tuple[FingerprintDataset, FingerprintDataset]:
    """Seeded random row split preserving time order within each part."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ds.rows))
    n_test = max(1, int(round(len(order) * test_fraction)))
    test_idx = set(order[:n_test].tolist())
    train_rows = tuple(r for i, r in enumerate(ds.rows) if i not in test_idx)
    test_rows = tuple(r for i, r in enumerate(ds.rows) if i in test_idx)
    return (
        FingerprintDataset(ap_columns=ds.ap_columns, rows=train_rows),
        FingerprintDataset(ap_columns=ds.ap_columns, rows=test_rows),
    )


def stratified_subsample(
    ds: FingerprintDataset,
    fraction: float,
    seed: int,
    cell_size: float = DEFAULT_STRATIFY_CELL_M,
) -> FingerprintDataset:
    """Spatially stratified row subsample preserving coverage diversity.

    The floor is partitioned into cell_size squares; each cell keeps
    round(fraction * count) of its rows, chosen uniformly at random, so the
    subsample thins every covered region proportionally instead of leaving
    spatial holes.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if fraction == 1.0:
        return ds
    cells: dict[tuple[int, int], list[int]] = {}
    for idx, row in enumerate(ds.rows):
        key = (int(math.floor(row.x / cell_size)), int(math.floor(row.y / cell_size)))
        cells.setdefault(key, []).append(idx)
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for key in sorted(cells):
        members = cells[key]
        n_keep = int(len(members) * fraction + 0.5)
        if n_keep > 0:
            chosen = rng.choice(len(members), size=n_keep, replace=False)
            keep.extend(members[i] for i in chosen)
    keep.sort()
    return FingerprintDataset(
        ap_columns=ds.ap_columns, rows=tuple(ds.rows[i] for i in keep)
    )


def ablate(
    ds: FingerprintDataset,
    fractions: Sequence[float],
    cfg: TrainConfig,
    seeds: Sequence[int],
    test_fraction: float = 0.2,
    cell_size: float = DEFAULT_STRATIFY_CELL_M,
) -> list[AblationRow]:
    """Reference-point density ablation.

    A held-out test split is fixed once (seeded by cfg.rng_seed) and reused
    for every fraction. Per fraction and seed, the training split is
    spatially subsampled, a model is trained, and the test MAE recorded;
    rows report the mean MAE across seeds.
    """
    for f in fractions:
        if not 0 < f <= 1:
            raise ValueError(f"fraction {f} outside (0, 1]")
    if not seeds:
        raise ValueError("need at least one seed")
    train_ds, test_ds = split_train_test(ds, test_fraction, cfg.rng_seed)
    test_targets = dataset_positions(test_ds)

    results = []
    for fraction in fractions:
        maes = []
        rp_count = 0
        for seed in seeds:
            sub = stratified_subsample(train_ds, fraction, seed, cell_size)
            if len(sub.rows) < cfg.batch_size:
                raise ValueError(
                    f"fraction {fraction} leaves {len(sub.rows)} rows, fewer than batch_size"
                )
            rp_count = len(sub.rows)
            model, _ = train(sub, replace(cfg, rng_seed=seed))
            pred = predict_dataset(model, test_ds)
            maes.append(metrics(pred, test_targets).mae)
        results.append(
            AblationRow(fraction=fraction, rp_count=rp_count, mean_mae=float(np.mean(maes)))
        )
    return results


def dataset_positions(ds: FingerprintDataset) -> np.ndarray:
    """The (rows x 2) true positions of a dataset."""
    return np.array([[row.x, row.y] for row in ds.rows], dtype=np.float64)


def ground_truth_consistency(
    robot_ds: FingerprintDataset, grid_ds: FingerprintDataset
) -> float:
    """Mean |RSSI difference| between grid points and their nearest robot rows.

    For each grid reference point, the spatially nearest robot row is found
    (ties go to the lowest row index) and the absolute RSSI differences are
    averaged over the APs present in both rows; the result is the mean of
    those per-point averages.
    """
    if len(robot_ds.rows) == 0 or len(grid_ds.rows) == 0:
        raise ValueError("both datasets must be non-empty")
    shared = set(robot_ds.ap_columns) & set(grid_ds.ap_columns)
    if not shared:
        raise ValueError("no shared APs")
    robot_cols = {ap: i for i, ap in enumerate(robot_ds.ap_columns)}
    grid_cols = {ap: i for i, ap in enumerate(grid_ds.ap_columns)}
    shared_pairs = [(grid_cols[ap], robot_cols[ap]) for ap in sorted(shared)]

    robot_xy = np.array([[r.x, r.y] for r in robot_ds.rows])
    per_point: list[float] = []
    for grow in grid_ds.rows:
        dists = np.hypot(robot_xy[:, 0] - grow.x, robot_xy[:, 1] - grow.y)
        rrow = robot_ds.rows[int(np.argmin(dists))]
        diffs = [
            abs(grow.rssi[gc] - rrow.rssi[rc])
            for gc, rc in shared_pairs
            if grow.rssi[gc] is not None and rrow.rssi[rc] is not None
        ]
        if diffs:
            per_point.append(float(np.mean(diffs)))
    if not per_point:
        raise ValueError("no comparable readings between the datasets")
    return float(np.mean(per_point))


def density_report(
    ds: FingerprintDataset | int, area_m2: float, duration_s: float
) -> tuple[float, float]:
    """Reference-point density: (rows per m^2, rows per second).

    Accepts a dataset or a plain row count (for what-if arithmetic on
    published survey numbers).
    """
    if area_m2 <= 0 or duration_s <= 0:
        raise ValueError("area and duration must be positive")
    rows = ds if isinstance(ds, int) else len(ds.rows)
    return rows / area_m2, rows / duration_s
