"""Dataset building, file formats, imputation and heatmap aggregation.

File formats (all newline = "\\n", UTF-8):
    - Fingerprint CSV: header ``timestamp,x_pos,y_pos,<mac1>,...,<macN>``;
      missing RSSI is the literal ``NaN``; floats carry full round-trip
      precision, with x/y padded to at least four decimal places.
    - Scan log: JSON lines, each ``{"t": <s>, "rssi": {"<mac>": <dBm>}}``.
    - Odometry CSV: header ``t,x,y,theta``.
    - Grid ground truth: one JSON array of ``{"x", "y", "scan"}`` objects.
    - Heatmap CSV: ``col,row,center_x,center_y,mean_rssi,count``.

Serialization is canonical (sorted keys, fixed float formatting), so
writing the same data twice produces identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .alignment import AlignmentResult
from .core import (
    FingerprintDataset,
    FingerprintRow,
    OdometrySample,
    Pose2D,
    WifiScan,
    canonical_ap_order,
    parse_ap_id,
)

MISSING_LITERAL = "NaN"
DEFAULT_FILL_DBM = -100.0
DEFAULT_HEATMAP_CELL_M = 0.33


class DataFormatError(ValueError):
    """A file violated its schema; the message names the offending record."""


@dataclass(frozen=True)
class HeatmapCell:
    mean_rssi: float
    sample_count: int


@dataclass(frozen=True)
class HeatmapGrid:
    """Per-cell average RSSI for one AP on a square grid.

    Cells are half-open squares [lo, hi) of side cell_size anchored at
    origin; only cells with at least one sample are stored.
    """

    cell_size: float
    origin: tuple[float, float]
    cells: dict[tuple[int, int], HeatmapCell]


def build_dataset(
    matches: AlignmentResult,
    scans: Sequence[WifiScan],
    odometry: Sequence[OdometrySample],
) -> FingerprintDataset:
    """Assemble the fingerprint dataset from an alignment.

    Columns are the canonical order of every AP seen in any scan; each row
    carries the scan timestamp, the matched odometry pose's x/y, and per
    column the scan's RSSI or None where that AP was out of reach.
    """
    columns = canonical_ap_order({ap for scan in scans for ap in scan.readings})
    index = {ap: i for i, ap in enumerate(columns)}
    rows = []
    for scan_idx, odom_idx in matches.matches:
        if not (0 <= scan_idx < len(scans)) or not (0 <= odom_idx < len(odometry)):
            raise ValueError("corrupt alignment: match index out of range")
        scan = scans[scan_idx]
        pose = odometry[odom_idx].pose
        slots: list[float | None] = [None] * len(columns)
        for ap, rssi in scan.readings.items():
            slots[index[ap]] = rssi
        rows.append(FingerprintRow(t=scan.t, x=pose.x, y=pose.y, rssi=tuple(slots)))
    return FingerprintDataset(ap_columns=tuple(columns), rows=tuple(rows))


def _fmt_float(v: float) -> str:
    """Shortest representation that round-trips to the same float."""
    return repr(float(v))


def _fmt_coord(v: float) -> str:
    """Round-trip float padded to at least four decimal places."""
    s = repr(float(v))
    if "e" in s or "E" in s or "." not in s:
        return s
    whole, frac = s.split(".")
    if len(frac) < 4:
        frac = frac.ljust(4, "0")
    return f"{whole}.{frac}"


def to_csv_text(ds: FingerprintDataset) -> str:
    """Render the dataset in the fingerprint CSV format."""
    lines = ["timestamp,x_pos,y_pos" + "".join("," + ap for ap in ds.ap_columns)]
    for row in ds.rows:
        cells = [_fmt_float(row.t), _fmt_coord(row.x), _fmt_coord(row.y)]
        cells.extend(MISSING_LITERAL if v is None else _fmt_float(v) for v in row.rssi)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def to_csv(ds: FingerprintDataset, sink: str | Path) -> None:
    Path(sink).write_text(to_csv_text(ds), encoding="utf-8", newline="\n")


def _parse_cell(text: str, line_no: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"line {line_no}: non-numeric {column} value {text!r}") from None
    if not math.isfinite(value):
        raise DataFormatError(f"line {line_no}: non-finite {column} value {text!r}")
    return value


def from_csv_text(text: str) -> FingerprintDataset:
    """Parse fingerprint CSV; errors name the offending line number."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataFormatError("line 1: missing header")
    header = lines[0].split(",")
    if header[:3] != ["timestamp", "x_pos", "y_pos"]:
        raise DataFormatError("line 1: malformed header, expected timestamp,x_pos,y_pos,...")
    try:
        ap_columns = tuple(parse_ap_id(name) for name in header[3:])
    except ValueError as exc:
        raise DataFormatError(f"line 1: {exc}") from None

    rows = []
    width = 3 + len(ap_columns)
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise DataFormatError(f"line {line_no}: expected {width} cells, got {len(cells)}")
        t = _parse_cell(cells[0], line_no, "timestamp")
        x = _parse_cell(cells[1], line_no, "x_pos")
        y = _parse_cell(cells[2], line_no, "y_pos")
        slots: list[float | None] = []
        for ap, cell in zip(ap_columns, cells[3:]):
            if cell == MISSING_LITERAL:
                slots.append(None)
            else:
                slots.append(_parse_cell(cell, line_no, ap))
        rows.append(FingerprintRow(t=t, x=x, y=y, rssi=tuple(slots)))
    try:
        return FingerprintDataset(ap_columns=ap_columns, rows=tuple(rows))
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def from_csv(source: str | Path) -> FingerprintDataset:
    return from_csv_text(Path(source).read_text(encoding="utf-8"))


def impute(
    ds: FingerprintDataset, fill_dbm: float = DEFAULT_FILL_DBM
) -> tuple[np.ndarray, np.ndarray]:
    """Dense (rows x APs) feature matrix plus (rows x 2) position targets.

    Every None slot becomes fill_dbm (out-of-reach APs read as a very weak
    signal); present values pass through unchanged and row order is kept.
    """
    if len(ds.rows) == 0:
        raise ValueError("cannot impute an empty dataset")
    features = np.full((len(ds.rows), len(ds.ap_columns)), fill_dbm, dtype=np.float64)
    targets = np.empty((len(ds.rows), 2), dtype=np.float64)
    for r, row in enumerate(ds.rows):
        for c, v in enumerate(row.rssi):
            if v is not None:
                features[r, c] = v
        targets[r, 0] = row.x
        targets[r, 1] = row.y
    return features, targets


def heatmap(
    ds: FingerprintDataset,
    ap: str,
    cell_size: float = DEFAULT_HEATMAP_CELL_M,
    origin: tuple[float, float] = (0.0, 0.0),
) -> HeatmapGrid:
    """Average RSSI of one AP per grid cell.

    Rows where the AP is absent are skipped; cells without samples are not
    stored. A sample exactly on a cell boundary lands in the higher-index
    cell (half-open cells).
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    ap = parse_ap_id(ap)
    if ap not in ds.ap_columns:
        raise ValueError(f"AP not in dataset: {ap}")
    col_idx = ds.ap_columns.index(ap)

    sums: dict[tuple[int, int], float] = {}
    counts: dict[tuple[int, int], int] = {}
    for row in ds.rows:
        v = row.rssi[col_idx]
        if v is None:
            continue
        key = (
            int(math.floor((row.x - origin[0]) / cell_size)),
            int(math.floor((row.y - origin[1]) / cell_size)),
        )
        sums[key] = sums.get(key, 0.0) + v
        counts[key] = counts.get(key, 0) + 1
    cells = {
        key: HeatmapCell(mean_rssi=sums[key] / counts[key], sample_count=counts[key])
        for key in sums
    }
    return HeatmapGrid(cell_size=cell_size, origin=origin, cells=cells)


def heatmap_to_csv(grid: HeatmapGrid, sink: str | Path) -> None:
    """Export a heatmap as col,row,center_x,center_y,mean_rssi,count."""
    lines = ["col,row,center_x,center_y,mean_rssi,count"]
    for (col, row) in sorted(grid.cells):
        cell = grid.cells[(col, row)]
        cx = grid.origin[0] + (col + 0.5) * grid.cell_size
        cy = grid.origin[1] + (row + 0.5) * grid.cell_size
        lines.append(
            f"{col},{row},{_fmt_float(cx)},{_fmt_float(cy)},"
            f"{_fmt_float(cell.mean_rssi)},{cell.sample_count}"
        )
    Path(sink).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _scan_to_obj(scan: WifiScan) -> dict:
    return {"t": scan.t, "rssi": dict(sorted(scan.readings.items()))}


def _scan_from_obj(obj: dict, where: str) -> WifiScan:
    if not isinstance(obj, dict) or set(obj) != {"t", "rssi"}:
        raise DataFormatError(f"{where}: expected an object with keys t and rssi")
    if not isinstance(obj["rssi"], dict) or not obj["rssi"]:
        raise DataFormatError(f"{where}: rssi must be a non-empty object")
    try:
        return WifiScan(t=float(obj["t"]), readings={k: float(v) for k, v in obj["rssi"].items()})
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{where}: {exc}") from None


def scan_log_write(scans: Iterable[WifiScan], sink: str | Path) -> None:
    """Write scans as JSON lines (one scan per line, keys sorted)."""
    lines = [json.dumps(_scan_to_obj(scan), sort_keys=True) for scan in scans]
    text = "\n".join(lines) + "\n" if lines else ""
    Path(sink).write_text(text, encoding="utf-8", newline="\n")


def scan_log_read(source: str | Path) -> list[WifiScan]:
    scans = []
    for idx, line in enumerate(Path(source).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"scan {idx}: invalid JSON ({exc})") from None
        scans.append(_scan_from_obj(obj, f"scan {idx}"))
    return scans


def odometry_write(samples: Iterable[OdometrySample], sink: str | Path) -> None:
    """Write odometry as CSV with header t,x,y,theta."""
    lines = ["t,x,y,theta"]
    for s in samples:
        lines.append(
            f"{_fmt_float(s.t)},{_fmt_float(s.pose.x)},"
            f"{_fmt_float(s.pose.y)},{_fmt_float(s.pose.heading)}"
        )
    Path(sink).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def odometry_read(source: str | Path) -> list[OdometrySample]:
    lines = Path(source).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "t,x,y,theta":
        raise DataFormatError("line 1: malformed header, expected t,x,y,theta")
    samples = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise DataFormatError(f"line {line_no}: expected 4 cells, got {len(cells)}")
        t = _parse_cell(cells[0], line_no, "t")
        x = _parse_cell(cells[1], line_no, "x")
        y = _parse_cell(cells[2], line_no, "y")
        theta = _parse_cell(cells[3], line_no, "theta")
        samples.append(OdometrySample(t=t, pose=Pose2D(x, y, theta)))
    return samples


def grid_truth_write(
    records: Iterable[tuple[float, float, WifiScan]], sink: str | Path
) -> None:
    """Write grid ground truth: a JSON array of {x, y, scan} objects."""
    payload = [
        {"x": x, "y": y, "scan": _scan_to_obj(scan)} for x, y, scan in records
    ]
    Path(sink).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )


def grid_truth_read(source: str | Path) -> list[tuple[float, float, WifiScan]]:
    try:
        payload = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON ({exc})") from None
    if not isinstance(payload, list):
        raise DataFormatError("expected a top-level JSON array")
    records = []
    for idx, obj in enumerate(payload):
        if not isinstance(obj, dict) or set(obj) != {"x", "y", "scan"}:
            raise DataFormatError(f"record {idx}: expected keys x, y, scan")
        scan = _scan_from_obj(obj["scan"], f"record {idx}")
        try:
            records.append((float(obj["x"]), float(obj["y"]), scan))
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"record {idx}: {exc}") from None
    return records


def dataset_to_grid_truth(ds: FingerprintDataset) -> list[tuple[float, float, WifiScan]]:
    """Re-express dataset rows as (x, y, scan) ground-truth records."""
    records = []
    for row in ds.rows:
        readings = {
            ap: v for ap, v in zip(ds.ap_columns, row.rssi) if v is not None
        }
        if readings:
            records.append((row.x, row.y, WifiScan(t=row.t, readings=readings)))
    return records


def grid_truth_to_dataset(
    records: Sequence[tuple[float, float, WifiScan]]
) -> FingerprintDataset:
    """Assemble a fingerprint dataset from grid ground-truth records."""
    if not records:
        return FingerprintDataset(ap_columns=(), rows=())
    columns = canonical_ap_order({ap for _, _, scan in records for ap in scan.readings})
    index = {ap: i for i, ap in enumerate(columns)}
    rows = []
    for x, y, scan in records:
        slots: list[float | None] = [None] * len(columns)
        for ap, rssi in scan.readings.items():
            slots[index[ap]] = rssi
        rows.append(FingerprintRow(t=scan.t, x=x, y=y, rssi=tuple(slots)))
    rows.sort(key=lambda r: r.t)
    return FingerprintDataset(ap_columns=tuple(columns), rows=tuple(rows))
