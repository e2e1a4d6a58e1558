import math

import numpy as np
import pytest

from wifiloc.core import Pose2D
from wifiloc.simulator import (
    AccessPointSpec,
    Floorplan,
    Rect,
    SurveyConfig,
    drive_continuous,
    grid_points,
    random_free_poses,
    rssi_at,
    survey_grid,
    take_scan,
)

AP = "02:00:00:00:00:01"


def make_ap(x=0.0, y=0.0, tx=-40.0, n=2.0, floor=-95.0):
    return AccessPointSpec(
        id=AP, position=Pose2D(x, y), tx_power_dbm=tx,
        path_loss_exponent=n, detection_floor_dbm=floor,
    )


class TestRssiAt:
    def test_tx_power_at_reference_distance(self):
        rng = np.random.default_rng(0)
        ap = make_ap()
        assert rssi_at(ap, Pose2D(1.0, 0.0), 0.0, rng) == -40.0

    def test_twenty_db_drop_at_ten_meters(self):
        # 10 * n * log10(10) with n = 2 is exactly 20 dB.
        rng = np.random.default_rng(0)
        ap = make_ap(n=2.0)
        assert rssi_at(ap, Pose2D(10.0, 0.0), 0.0, rng) == -60.0

    def test_below_detection_floor_is_absent(self):
        rng = np.random.default_rng(0)
        ap = make_ap(n=2.0, floor=-55.0)
        assert rssi_at(ap, Pose2D(10.0, 0.0), 0.0, rng) is None

    def test_clamped_inside_reference_distance(self):
        rng = np.random.default_rng(0)
        ap = make_ap()
        assert rssi_at(ap, Pose2D(0.25, 0.0), 0.0, rng) == -40.0

    def test_strictly_decreasing_beyond_reference(self):
        rng = np.random.default_rng(0)
        ap = make_ap(n=3.0)
        values = [rssi_at(ap, Pose2D(d, 0.0), 0.0, rng) for d in np.linspace(1.0, 12.0, 40)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_shadowing_mean_converges_to_closed_form(self):
        rng = np.random.default_rng(7)
        ap = make_ap(n=2.0)
        sigma, n_draws = 2.0, 20000
        samples = [rssi_at(ap, Pose2D(5.0, 0.0), sigma, rng) for _ in range(n_draws)]
        expected = -40.0 - 20.0 * math.log10(5.0)
        assert abs(np.mean(samples) - expected) < 3 * sigma / math.sqrt(n_draws)

    def test_deterministic_given_rng_state(self):
        ap = make_ap()
        a = rssi_at(ap, Pose2D(3.0, 0.0), 1.5, np.random.default_rng(11))
        b = rssi_at(ap, Pose2D(3.0, 0.0), 1.5, np.random.default_rng(11))
        assert a == b


class TestDriveContinuous:
    def _cfg(self, **kw):
        return SurveyConfig(**kw)

    def test_sample_and_scan_counts(self):
        # 10 m at 1 m/s: duration 10 s, inclusive endpoints.
        plan = Floorplan(width=12.0, height=2.0)
        rec = drive_continuous(
            plan, [make_ap()], [Pose2D(0.5, 1.0), Pose2D(10.5, 1.0)], 1.0, self._cfg()
        )
        assert len(rec.odometry) == 1001
        assert len(rec.scans) == 11

    @pytest.mark.parametrize("length,speed,rate", [(4.0, 1.0, 1.0), (6.0, 0.5, 2.0)])
    def test_scan_count_formula_for_integral_products(self, length, speed, rate):
        plan = Floorplan(width=length + 1.0, height=2.0)
        cfg = SurveyConfig(odometry_rate_hz=100.0, scan_rate_hz=rate)
        rec = drive_continuous(
            plan, [make_ap()], [Pose2D(0.5, 1.0), Pose2D(0.5 + length, 1.0)], speed, cfg
        )
        duration = length / speed
        assert len(rec.scans) == math.floor(duration * rate) + 1

    def test_zero_noise_odometry_equals_truth(self):
        plan = Floorplan(width=12.0, height=2.0)
        rec = drive_continuous(
            plan, [make_ap()], [Pose2D(0.5, 1.0), Pose2D(10.5, 1.0)], 1.0, self._cfg()
        )
        assert rec.odometry == rec.true_poses

    def test_reproducible_per_seed(self):
        plan = Floorplan(width=12.0, height=2.0)
        cfg = self._cfg(shadowing_sigma_db=2.0, odom_drift_per_m=0.01, odom_jitter_m=0.002, rng_seed=5)
        wps = [Pose2D(0.5, 1.0), Pose2D(10.5, 1.0)]
        rec1 = drive_continuous(plan, [make_ap()], wps, 1.0, cfg)
        rec2 = drive_continuous(plan, [make_ap()], wps, 1.0, cfg)
        assert rec1 == rec2

    def test_noisy_odometry_keeps_true_timestamps(self):
        plan = Floorplan(width=12.0, height=2.0)
        cfg = self._cfg(odom_drift_per_m=0.05, odom_jitter_m=0.01, rng_seed=3)
        rec = drive_continuous(plan, [make_ap()], [Pose2D(0.5, 1.0), Pose2D(10.5, 1.0)], 1.0, cfg)
        assert [o.t for o in rec.odometry] == [t.t for t in rec.true_poses]
        assert rec.odometry != rec.true_poses

    def test_scan_times_lie_within_odometry_span(self):
        plan = Floorplan(width=12.0, height=2.0)
        cfg = self._cfg(scan_start_offset_s=0.3)
        rec = drive_continuous(plan, [make_ap()], [Pose2D(0.5, 1.0), Pose2D(10.5, 1.0)], 1.0, cfg)
        assert rec.odometry[0].t <= rec.scans[0].t
        assert rec.scans[-1].t <= rec.odometry[-1].t

    def test_waypoint_inside_obstacle(self):
        plan = Floorplan(width=10.0, height=10.0, obstacles=(Rect(4.0, 4.0, 6.0, 6.0),))
        with pytest.raises(ValueError, match="unreachable waypoint"):
            drive_continuous(plan, [make_ap()], [Pose2D(1, 1), Pose2D(5, 5)], 1.0, self._cfg())

    def test_segment_crossing_obstacle(self):
        plan = Floorplan(width=10.0, height=10.0, obstacles=(Rect(4.0, 0.0, 6.0, 10.0),))
        with pytest.raises(ValueError, match="path blocked"):
            drive_continuous(plan, [make_ap()], [Pose2D(1, 5), Pose2D(9, 5)], 1.0, self._cfg())

    def test_bad_speed(self):
        plan = Floorplan(width=10.0, height=10.0)
        with pytest.raises(ValueError, match="speed"):
            drive_continuous(plan, [make_ap()], [Pose2D(1, 1), Pose2D(2, 2)], 0.0, self._cfg())


class TestSurveyGrid:
    def test_coarse_grid_point_count(self):
        # 4 x 10 m at 0.99 m: floor(4/0.99)+1 = 5 columns, floor(10/0.99)+1 = 11 rows.
        plan = Floorplan(width=4.0, height=10.0)
        assert len(grid_points(plan, 0.99)) == 55

    def test_obstacles_exclude_points(self):
        plan = Floorplan(width=0.5, height=2.0, obstacles=(Rect(0.0, 0.0, 0.5, 1.5),))
        assert grid_points(plan, 1.0) == [(0.0, 2.0)]

    def test_dwell_multiplies_rows(self):
        plan = Floorplan(width=4.0, height=10.0)
        ds = survey_grid(plan, [make_ap(x=2.0, y=5.0)], 0.99, 3, SurveyConfig())
        assert len(ds.rows) == 3 * 55

    def test_degenerate_spacing(self):
        plan = Floorplan(width=4.0, height=10.0)
        with pytest.raises(ValueError, match="degenerate grid"):
            survey_grid(plan, [make_ap()], 11.0, 1, SurveyConfig())

    def test_denser_grid_has_more_points(self):
        plans = [
            Floorplan(width=4.0, height=10.0),
            Floorplan(width=7.3, height=3.1, obstacles=(Rect(1.0, 1.0, 2.5, 2.5),)),
        ]
        for plan in plans:
            for s in (0.4, 0.9, 1.7):
                assert len(grid_points(plan, s)) >= len(grid_points(plan, 2 * s))

    def test_rows_carry_exact_grid_coordinates(self):
        plan = Floorplan(width=2.0, height=2.0)
        ds = survey_grid(plan, [make_ap(x=1.0, y=1.0)], 1.0, 1, SurveyConfig())
        assert {(r.x, r.y) for r in ds.rows} == {
            (0.0, 0.0), (1.0, 0.0), (2.0, 0.0),
            (0.0, 1.0), (1.0, 1.0), (2.0, 1.0),
            (0.0, 2.0), (1.0, 2.0), (2.0, 2.0),
        }

    def test_timestamps_non_decreasing(self):
        plan = Floorplan(width=2.0, height=2.0)
        ds = survey_grid(plan, [make_ap(x=1.0, y=1.0)], 1.0, 2, SurveyConfig())
        ts = [r.t for r in ds.rows]
        assert ts == sorted(ts)


class TestHelpers:
    def test_take_scan_covers_all_reachable_aps(self):
        aps = [make_ap(), AccessPointSpec(id="02:00:00:00:00:02", position=Pose2D(3.0, 0.0))]
        scan = take_scan(aps, Pose2D(1.0, 0.0), 0.0, 0.0, np.random.default_rng(0))
        assert set(scan.readings) == {AP, "02:00:00:00:00:02"}

    def test_take_scan_none_when_nothing_detected(self):
        ap = make_ap(tx=-40.0, n=2.0, floor=-41.0)
        scan = take_scan([ap], Pose2D(100.0, 0.0), 0.0, 0.0, np.random.default_rng(0))
        assert scan is None

    def test_random_free_poses_respect_obstacles(self):
        plan = Floorplan(width=4.0, height=4.0, obstacles=(Rect(0.0, 0.0, 2.0, 2.0),))
        poses = random_free_poses(plan, 50, np.random.default_rng(1))
        assert len(poses) == 50
        assert all(plan.is_free(p.x, p.y) for p in poses)


class TestFloorplanValidation:
    def test_obstacle_outside_bounds(self):
        with pytest.raises(ValueError, match="outside"):
            Floorplan(width=2.0, height=2.0, obstacles=(Rect(1.0, 1.0, 3.0, 1.5),))

    def test_ap_parameter_bounds(self):
        with pytest.raises(ValueError, match="path_loss_exponent"):
            AccessPointSpec(id=AP, position=Pose2D(0, 0), path_loss_exponent=1.0)
        with pytest.raises(ValueError, match="floor"):
            AccessPointSpec(id=AP, position=Pose2D(0, 0), tx_power_dbm=-50.0, detection_floor_dbm=-40.0)
