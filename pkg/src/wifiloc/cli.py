"""Command-line interface wiring the pipeline end to end.

Subcommands: simulate, align, train, eval, ablate, heatmap, compare-truth.
Results go to stdout or --out files; diagnostics go to stderr. Exit codes:
0 success, 1 usage error, 2 data/format error, 3 numeric failure.

A scenario is a single JSON document describing the floorplan, access
points, survey waypoints and rates; `--scenario office` resolves to the
bundled 4 m x 10 m reference room.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from . import dataset_io, evaluation, localizer
from .alignment import match_scans
from .core import Pose2D
from .dataset_io import DataFormatError
from .localizer import NumericError, TrainConfig
from .simulator import (
    AccessPointSpec,
    Floorplan,
    Rect,
    SurveyConfig,
    drive_continuous,
    survey_grid,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class ScenarioConfig:
    """One survey scenario: geometry, radio environment and rates."""

    name: str
    floorplan: Floorplan
    access_points: tuple[AccessPointSpec, ...]
    waypoints: tuple[Pose2D, ...]
    speed_mps: float
    survey: SurveyConfig
    grid_spacings: tuple[float, ...]
    dwell_scans: int
    train_overrides: dict


def bundled_scenario_path(name: str = "office") -> Path:
    """Filesystem path of a scenario shipped with the package."""
    return Path(str(resources.files("wifiloc").joinpath(f"scenarios/{name}.json")))


def load_scenario(spec: str | Path) -> ScenarioConfig:
    """Load and validate a scenario JSON document.

    `spec` is a filesystem path, or a bare bundled-scenario name such as
    "office". Geometry consistency (waypoints on free floor, unblocked
    path segments, obstacles inside bounds) is checked here.
    """
    path = Path(spec)
    if not path.exists():
        candidate = bundled_scenario_path(str(spec))
        if candidate.exists():
            path = candidate
        else:
            raise DataFormatError(f"scenario not found: {spec}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"scenario {path}: invalid JSON ({exc})") from None

    try:
        fp = doc["floorplan"]
        plan = Floorplan(
            width=float(fp["width"]),
            height=float(fp["height"]),
            obstacles=tuple(
                Rect(float(o["x_min"]), float(o["y_min"]), float(o["x_max"]), float(o["y_max"]))
                for o in fp.get("obstacles", [])
            ),
        )
        aps = tuple(
            AccessPointSpec(
                id=a["id"],
                position=Pose2D(float(a["x"]), float(a["y"])),
                tx_power_dbm=float(a["tx_power_dbm"]),
                path_loss_exponent=float(a["path_loss_exponent"]),
                detection_floor_dbm=float(a["detection_floor_dbm"]),
            )
            for a in doc["access_points"]
        )
        waypoints = tuple(Pose2D(float(x), float(y)) for x, y in doc["waypoints"])
        survey = SurveyConfig(**doc["survey"])
        grid = doc.get("grid", {})
        scenario = ScenarioConfig(
            name=str(doc.get("name", path.stem)),
            floorplan=plan,
            access_points=aps,
            waypoints=waypoints,
            speed_mps=float(doc["speed_mps"]),
            survey=survey,
            grid_spacings=tuple(float(s) for s in grid.get("spacings", [0.99])),
            dwell_scans=int(grid.get("dwell_scans", 1)),
            train_overrides=dict(doc.get("train", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"scenario {path}: {exc}") from None

    for w in scenario.waypoints:
        if not plan.is_free(w.x, w.y):
            raise DataFormatError(f"scenario {path}: waypoint ({w.x}, {w.y}) is not on free floor")
    if scenario.speed_mps <= 0:
        raise DataFormatError(f"scenario {path}: speed_mps must be positive")
    return scenario


def scenario_train_config(scenario: ScenarioConfig, **overrides) -> TrainConfig:
    """TrainConfig from scenario overrides, then per-call overrides."""
    merged = dict(scenario.train_overrides)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    allowed = {f.name for f in fields(TrainConfig)}
    unknown = set(merged) - allowed
    if unknown:
        raise DataFormatError(f"unknown train config keys: {sorted(unknown)}")
    return TrainConfig(**merged)


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit with code 1 per our convention."""

    def error(self, message: str):  # noqa: D102
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "continuous":
        rec = drive_continuous(
            scenario.floorplan,
            list(scenario.access_points),
            list(scenario.waypoints),
            scenario.speed_mps,
            scenario.survey,
        )
        dataset_io.odometry_write(rec.odometry, out_dir / "odometry.csv")
        dataset_io.scan_log_write(rec.scans, out_dir / "scans.jsonl")
        print(f"odometry samples: {len(rec.odometry)}")
        print(f"wifi scans: {len(rec.scans)}")
        print(f"wrote {out_dir / 'odometry.csv'} and {out_dir / 'scans.jsonl'}")
    else:
        for spacing in scenario.grid_spacings:
            ds = survey_grid(
                scenario.floorplan,
                list(scenario.access_points),
                spacing,
                scenario.dwell_scans,
                scenario.survey,
            )
            out = out_dir / f"grid_truth_{spacing:g}.json"
            dataset_io.grid_truth_write(dataset_io.dataset_to_grid_truth(ds), out)
            print(f"grid spacing {spacing:g} m: {len(ds.rows)} rows -> {out}")
    return EXIT_OK


def _cmd_align(args) -> int:
    odometry = dataset_io.odometry_read(args.odometry)
    scans = dataset_io.scan_log_read(args.scans)
    if not scans:
        raise DataFormatError("scan log is empty")
    result = match_scans(scans, odometry)
    ds = dataset_io.build_dataset(result, scans, odometry)
    dataset_io.to_csv(ds, args.out)
    gaps = [abs(scans[i].t - odometry[j].t) for i, j in result.matches]
    print(f"dtw total cost: {result.total_cost}")
    print(f"matches: {len(result.matches)} scans against {len(odometry)} odometry samples")
    print(f"max |scan t - odom t|: {max(gaps):.6f} s")
    print(f"scans outside odometry span: {len(result.out_of_span_scans)}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    ds = dataset_io.from_csv(args.dataset)
    overrides = {"rng_seed": args.seed, "epochs_max": args.epochs}
    merged = {k: v for k, v in overrides.items() if v is not None}
    cfg = TrainConfig(**merged)
    model, report = localizer.train(ds, cfg)
    localizer.model_save(model, args.model_out)
    loss_out = Path(args.loss_out) if args.loss_out else Path(args.model_out).with_suffix(".losses.csv")
    lines = ["epoch,train_loss,val_loss"]
    for e, (tr, va) in enumerate(zip(report.train_losses, report.val_losses)):
        lines.append(f"{e},{tr!r},{va!r}")
    loss_out.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"epochs run: {report.epochs_run} (best epoch {report.best_epoch})")
    print(f"best validation loss: {report.val_losses[report.best_epoch]}")
    print(f"wrote {args.model_out} and {loss_out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    ds = dataset_io.from_csv(args.dataset)
    model = localizer.model_load(args.model)
    pred = localizer.predict_dataset(model, ds)
    report = evaluation.metrics(
        pred,
        evaluation.dataset_positions(ds),
        rp_count=args.rp_count,
        area_m2=args.area,
    )
    if args.json:
        print(evaluation.report_to_json(report))
    else:
        print(evaluation.report_to_text(report))
    return EXIT_OK


def _cmd_ablate(args) -> int:
    ds = dataset_io.from_csv(args.dataset)
    try:
        fractions = [float(f) for f in args.fractions.split(",") if f]
    except ValueError:
        raise DataFormatError(f"bad --fractions value: {args.fractions}") from None
    seeds = list(range(args.seeds))
    cfg = TrainConfig(rng_seed=args.seed, epochs_max=args.epochs) if args.epochs else TrainConfig(rng_seed=args.seed)
    rows = evaluation.ablate(ds, fractions, cfg, seeds)
    print(f"{'fraction':>9} {'rp_count':>9} {'mean_mae_m':>11}")
    for row in rows:
        print(f"{row.fraction:>9.2f} {row.rp_count:>9} {row.mean_mae:>11.4f}")
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    ds = dataset_io.from_csv(args.dataset)
    grid = dataset_io.heatmap(ds, args.ap, cell_size=args.cell)
    dataset_io.heatmap_to_csv(grid, args.out)
    print(f"{len(grid.cells)} populated cells -> {args.out}")
    return EXIT_OK


def _cmd_compare_truth(args) -> int:
    robot = dataset_io.from_csv(args.robot)
    grid = dataset_io.grid_truth_to_dataset(dataset_io.grid_truth_read(args.grid))
    mean_diff = evaluation.ground_truth_consistency(robot, grid)
    print(f"mean |RSSI difference| vs nearest robot row: {mean_diff:.3f} dB")
    for label, ds in (("robot", robot), ("grid", grid)):
        if len(ds.rows) >= 2:
            duration = ds.rows[-1].t - ds.rows[0].t
            if duration > 0:
                per_m2, per_s = evaluation.density_report(ds, args.area, duration)
                print(
                    f"{label}: {len(ds.rows)} RPs over {duration:.1f} s -> "
                    f"{per_m2:.3f} RP/m^2, {per_s:.4f} RP/s"
                )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wifiloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a survey simulation")
    p.add_argument("--scenario", required=True, help="scenario JSON path or bundled name (e.g. office)")
    p.add_argument("--mode", required=True, choices=("continuous", "grid"))
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("align", help="DTW-align scans to odometry and build the fingerprint CSV")
    p.add_argument("--odometry", required=True)
    p.add_argument("--scans", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("train", help="train the MLP localizer")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--loss-out", default=None, help="per-epoch loss CSV (default: alongside the model)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a labeled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--rp-count", type=int, default=0, help="training reference-point count, for the report")
    p.add_argument("--area", type=float, default=0.0, help="surveyed area in m^2, for the report")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="reference-point density ablation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--fractions", default="1.0,0.5,0.25")
    p.add_argument("--seeds", type=int, default=3, help="number of seeds to average over")
    p.add_argument("--seed", type=int, default=0, help="base seed for the test split")
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("heatmap", help="per-cell average RSSI for one AP")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ap", required=True)
    p.add_argument("--cell", type=float, default=dataset_io.DEFAULT_HEATMAP_CELL_M)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("compare-truth", help="robot dataset vs grid ground truth")
    p.add_argument("--robot", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--area", type=float, default=40.0, help="surveyed area in m^2")
    p.set_defaults(func=_cmd_compare_truth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
