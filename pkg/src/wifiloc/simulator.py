"""Synthetic survey generation: the hardware-free stand-in for the robot.

Radio model: log-distance path loss with log-normal shadowing,

    rssi = tx_power_dbm - 10 * n * log10(max(d, d0) / d0) + N(0, sigma^2)

with reference distance d0 = 1 m. An AP whose (shadowed) RSSI falls below
its detection floor is absent from the scan, which models out-of-reach APs.
Obstacles block robot motion only; they do not attenuate the radio.

Two survey modes are provided:
    - drive_continuous: piecewise-linear trajectory through waypoints,
      dense odometry (default 100 Hz) plus sparse WiFi scans (default 1 Hz),
      odometry optionally corrupted by drift and jitter.
    - survey_grid: dwell at each lattice point and log the exact position
      per scan, producing a ground-truth fingerprint dataset directly.

Everything is driven by an explicit seeded generator, so runs are
reproducible and may execute in parallel under distinct seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    FingerprintDataset,
    FingerprintRow,
    OdometrySample,
    Pose2D,
    WifiScan,
    canonical_ap_order,
    parse_ap_id,
    wrap_angle,
)

REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters; used for obstacles."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("rectangle must have positive extent")

    def contains(self, x: float, y: float) -> bool:
        """Closed containment: boundary points count as inside."""
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Floorplan:
    """Rectangular floor with axis-aligned rectangular obstacles."""

    width: float
    height: float
    obstacles: tuple[Rect, ...] = ()

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ValueError("floorplan dimensions must be positive")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for ob in self.obstacles:
            if ob.x_min < 0 or ob.y_min < 0 or ob.x_max > self.width or ob.y_max > self.height:
                raise ValueError("obstacle extends outside floorplan bounds")

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def is_free(self, x: float, y: float) -> bool:
        """Inside the floor and not inside (or on the edge of) any obstacle."""
        if not self.in_bounds(x, y):
            return False
        return not any(ob.contains(x, y) for ob in self.obstacles)


@dataclass(frozen=True)
class AccessPointSpec:
    """Transmitter parameters for one synthetic AP.

    tx_power_dbm is the received power at the reference distance (1 m);
    path_loss_exponent is ~2 in free space, higher indoors.
    """

    id: str
    position: Pose2D
    tx_power_dbm: float = -40.0
    path_loss_exponent: float = 2.5
    detection_floor_dbm: float = -95.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", parse_ap_id(self.id))
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ValueError("path_loss_exponent must be in [1.5, 6.0]")
        if self.detection_floor_dbm > self.tx_power_dbm:
            raise ValueError("detection floor cannot exceed tx power")


@dataclass(frozen=True)
class SurveyConfig:
    """Sampling rates, noise levels and the seed for one survey run.

    The odometry and scan streams intentionally run at different rates and
    may start at different times (scan_start_offset_s), which is what makes
    the downstream time alignment necessary.

    odom_drift_per_m seeds a translational random walk whose variance grows
    with distance traveled; odom_jitter_m is an independent per-sample
    position noise.
    """

    odometry_rate_hz: float = 100.0
    scan_rate_hz: float = 1.0
    scan_start_offset_s: float = 0.0
    shadowing_sigma_db: float = 0.0
    odom_drift_per_m: float = 0.0
    odom_jitter_m: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.odometry_rate_hz > self.scan_rate_hz > 0:
            raise ValueError("need odometry_rate_hz > scan_rate_hz > 0")
        if self.scan_start_offset_s < 0:
            raise ValueError("scan_start_offset_s must be >= 0")
        for name in ("shadowing_sigma_db", "odom_drift_per_m", "odom_jitter_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class SurveyRecording:
    """Everything one continuous survey produced (the bag-file analogue)."""

    true_poses: tuple[OdometrySample, ...]
    odometry: tuple[OdometrySample, ...]
    scans: tuple[WifiScan, ...]
    config: SurveyConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "true_poses", tuple(self.true_poses))
        object.__setattr__(self, "odometry", tuple(self.odometry))
        object.__setattr__(self, "scans", tuple(self.scans))
        if len(self.true_poses) != len(self.odometry):
            raise ValueError("true_poses and odometry must have equal length")
        for truth, noisy in zip(self.true_poses, self.odometry):
            if truth.t != noisy.t:
                raise ValueError("odometry timestamps must mirror true poses")


def rssi_at(
    ap: AccessPointSpec,
    p: Pose2D,
    shadowing_sigma_db: float,
    rng: np.random.Generator,
) -> float | None:
    """Received power at pose `p` from `ap`, or None when below the floor.

    Deterministic given the generator state: exactly one normal draw is
    consumed per call when shadowing_sigma_db > 0, none otherwise.
    """
    d = math.hypot(p.x - ap.position.x, p.y - ap.position.y)
    d = max(d, REFERENCE_DISTANCE_M)
    rssi = ap.tx_power_dbm - 10.0 * ap.path_loss_exponent * math.log10(d / REFERENCE_DISTANCE_M)
    if shadowing_sigma_db > 0:
        rssi += rng.normal(0.0, shadowing_sigma_db)
    if rssi < ap.detection_floor_dbm:
        return None
    return rssi


def take_scan(
    aps: list[AccessPointSpec],
    p: Pose2D,
    t: float,
    shadowing_sigma_db: float,
    rng: np.random.Generator,
) -> WifiScan | None:
    """Scan all APs from pose `p`; None when nothing is detected."""
    readings = {}
    for ap in aps:
        rssi = rssi_at(ap, p, shadowing_sigma_db, rng)
        if rssi is not None:
            readings[ap.id] = rssi
    if not readings:
        return None
    return WifiScan(t=t, readings=readings)


class _Path:
    """Arc-length parameterization of a piecewise-linear waypoint path."""

    def __init__(self, waypoints: list[Pose2D]):
        pts = [(w.x, w.y) for w in waypoints]
        self.points = pts
        seg_lengths = []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            seg_lengths.append(math.hypot(x1 - x0, y1 - y0))
        self.seg_lengths = seg_lengths
        self.cum = [0.0]
        for L in seg_lengths:
            self.cum.append(self.cum[-1] + L)
        self.total = self.cum[-1]

    def pose_at(self, s: float) -> Pose2D:
        """Pose at arc length s (clamped to the path ends)."""
        s = min(max(s, 0.0), self.total)
        # Find the segment containing s; zero-length segments are skipped.
        k = 0
        for k in range(len(self.seg_lengths)):
            if s <= self.cum[k + 1] and self.seg_lengths[k] > 0:
                break
        x0, y0 = self.points[k]
        x1, y1 = self.points[k + 1]
        L = self.seg_lengths[k]
        frac = (s - self.cum[k]) / L if L > 0 else 0.0
        heading = wrap_angle(math.atan2(y1 - y0, x1 - x0))
        return Pose2D(x0 + frac * (x1 - x0), y0 + frac * (y1 - y0), heading)


def _segment_hits_rect(x0: float, y0: float, x1: float, y1: float, r: Rect) -> bool:
    """Does the closed segment intersect the closed rectangle?

    Standard slab clipping (Liang-Barsky) on the segment parameter.
    """
    t_lo, t_hi = 0.0, 1.0
    for p, d, lo, hi in ((x0, x1 - x0, r.x_min, r.x_max), (y0, y1 - y0, r.y_min, r.y_max)):
        if d == 0.0:
            if p < lo or p > hi:
                return False
        else:
            ta, tb = (lo - p) / d, (hi - p) / d
            if ta > tb:
                ta, tb = tb, ta
            t_lo = max(t_lo, ta)
            t_hi = min(t_hi, tb)
            if t_lo > t_hi:
                return False
    return True


def drive_continuous(
    plan: Floorplan,
    aps: list[AccessPointSpec],
    waypoints: list[Pose2D],
    speed: float,
    cfg: SurveyConfig,
) -> SurveyRecording:
    """Drive the piecewise-linear waypoint path and record a survey.

    Odometry is sampled at cfg.odometry_rate_hz from t = 0 through the full
    drive duration (inclusive endpoints); scans fire at cfg.scan_rate_hz
    starting at cfg.scan_start_offset_s. Scan RSSI is evaluated at the true
    pose; noisy odometry adds accumulated drift plus per-sample jitter.

    There is no path planning: a waypoint inside an obstacle raises
    "unreachable waypoint" and a segment crossing one raises "path blocked".
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    for w in waypoints:
        if not plan.is_free(w.x, w.y):
            raise ValueError(f"unreachable waypoint ({w.x}, {w.y})")
    for a, b in zip(waypoints, waypoints[1:]):
        for ob in plan.obstacles:
            if _segment_hits_rect(a.x, a.y, b.x, b.y, ob):
                raise ValueError(f"path blocked by obstacle between ({a.x}, {a.y}) and ({b.x}, {b.y})")

    path = _Path(waypoints)
    duration = path.total / speed
    rng = np.random.default_rng(cfg.rng_seed)

    dt = 1.0 / cfg.odometry_rate_hz
    n_odom = int(math.floor(duration * cfg.odometry_rate_hz)) + 1
    step_dist = speed * dt

    true_poses: list[OdometrySample] = []
    odometry: list[OdometrySample] = []
    drift = np.zeros(2)
    for k in range(n_odom):
        t = k / cfg.odometry_rate_hz
        pose = path.pose_at(speed * t)
        true_poses.append(OdometrySample(t=t, pose=pose))
        if k > 0 and cfg.odom_drift_per_m > 0:
            drift = drift + rng.normal(0.0, cfg.odom_drift_per_m * math.sqrt(step_dist), size=2)
        jitter = rng.normal(0.0, cfg.odom_jitter_m, size=2) if cfg.odom_jitter_m > 0 else np.zeros(2)
        noisy = Pose2D(pose.x + drift[0] + jitter[0], pose.y + drift[1] + jitter[1], pose.heading)
        odometry.append(OdometrySample(t=t, pose=noisy))

    scans: list[WifiScan] = []
    k = 0
    while True:
        t = cfg.scan_start_offset_s + k / cfg.scan_rate_hz
        if t > duration:
            break
        scan = take_scan(aps, path.pose_at(speed * t), t, cfg.shadowing_sigma_db, rng)
        if scan is not None:
            scans.append(scan)
        k += 1

    return SurveyRecording(
        true_poses=tuple(true_poses),
        odometry=tuple(odometry),
        scans=tuple(scans),
        config=cfg,
    )


def grid_points(plan: Floorplan, spacing: float) -> list[tuple[float, float]]:
    """Lattice points k*spacing anchored at the floor corner (0, 0),
    inside the bounds and outside all obstacles."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if spacing > plan.width and spacing > plan.height:
        raise ValueError("degenerate grid: spacing exceeds both floor dimensions")
    nx = int(math.floor(plan.width / spacing)) + 1
    ny = int(math.floor(plan.height / spacing)) + 1
    points = []
    for iy in range(ny):
        for ix in range(nx):
            x, y = ix * spacing, iy * spacing
            if plan.is_free(x, y):
                points.append((x, y))
    return points


def survey_grid(
    plan: Floorplan,
    aps: list[AccessPointSpec],
    spacing: float,
    dwell_scans: int,
    cfg: SurveyConfig,
) -> FingerprintDataset:
    """Grid-mode ground-truth survey: dwell at each lattice point.

    Position logging is exact in this mode (the operator types the
    position), so the result is already a fingerprint dataset and needs no
    alignment. Each grid point contributes dwell_scans rows; scan
    timestamps advance by one scan period per scan across the whole survey.
    """
    if dwell_scans < 1:
        raise ValueError("dwell_scans must be >= 1")
    points = grid_points(plan, spacing)

    rng = np.random.default_rng(cfg.rng_seed)
    scan_period = 1.0 / cfg.scan_rate_hz
    records: list[tuple[float, float, WifiScan]] = []
    tick = 0
    for x, y in points:
        pose = Pose2D(x, y)
        for _ in range(dwell_scans):
            scan = take_scan(aps, pose, tick * scan_period, cfg.shadowing_sigma_db, rng)
            tick += 1
            if scan is not None:
                records.append((x, y, scan))

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
    return FingerprintDataset(ap_columns=tuple(columns), rows=tuple(rows))


def random_free_poses(
    plan: Floorplan, count: int, rng: np.random.Generator
) -> list[Pose2D]:
    """Uniform random poses on the free floor area, by rejection sampling."""
    poses: list[Pose2D] = []
    while len(poses) < count:
        x = rng.uniform(0.0, plan.width)
        y = rng.uniform(0.0, plan.height)
        if plan.is_free(x, y):
            poses.append(Pose2D(x, y))
    return poses
