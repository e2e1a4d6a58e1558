import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wifiloc.alignment import backtrack, dtw, match_scans
from wifiloc.core import OdometrySample, Pose2D, WifiScan
from wifiloc.simulator import Floorplan, SurveyConfig, drive_continuous

from oracles import brute_force_dtw

AP = "02:00:00:00:00:01"


def abs_diff(x, y):
    return abs(x - y)


def increasing_seq(rng, max_len=8):
    n = rng.integers(1, max_len + 1)
    return np.sort(rng.uniform(0.0, 10.0, size=n)).tolist()


class TestDtw:
    def test_identical_sequences_cost_zero(self):
        assert dtw([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).total_cost == 0.0

    def test_single_cell(self):
        assert dtw([0.0], [0.5]).total_cost == 0.5

    def test_border_initialization(self):
        c = dtw([0.0, 1.0], [0.0, 1.0, 2.0])
        assert c.cells[0, 0] == 0.0
        assert np.all(np.isinf(c.cells[0, 1:]))
        assert np.all(np.isinf(c.cells[1:, 0]))

    def test_known_example_matches_enumeration(self):
        a, b = [0.0, 1.0, 2.0], [0.0, 0.4, 1.1, 2.2]
        expected = brute_force_dtw(a, b, abs_diff)
        assert dtw(a, b).total_cost == expected

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError, match="empty sequence"):
            dtw([], [1.0])
        with pytest.raises(ValueError, match="empty sequence"):
            dtw([1.0], [])

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            dtw([1.0, 1.0], [0.0])

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = increasing_seq(rng), increasing_seq(rng)
            assert dtw(a, b).total_cost == dtw(b, a).total_cost

    def test_generic_cost_path_matches_compiled_path(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a, b = increasing_seq(rng), increasing_seq(rng)
            fast = dtw(a, b)
            generic = dtw(a, b, local_cost=abs_diff)
            np.testing.assert_array_equal(fast.cells, generic.cells)

    def test_custom_local_cost(self):
        sq = lambda x, y: (x - y) ** 2
        a, b = [0.0, 1.0], [0.0, 1.5]
        assert dtw(a, b, local_cost=sq).total_cost == brute_force_dtw(a, b, sq)

    def test_oracle_equivalence_random_instances(self):
        rng = np.random.default_rng(12345)
        for _ in range(100):
            a, b = increasing_seq(rng), increasing_seq(rng)
            got = dtw(a, b).total_cost
            expected = brute_force_dtw(a, b, abs_diff)
            assert got == expected or abs(got - expected) <= 1e-9 * abs(expected)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=6, unique=True),
        st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=6, unique=True),
    )
    def test_oracle_equivalence_property(self, a, b):
        a, b = sorted(a), sorted(b)
        got = dtw(a, b).total_cost
        expected = brute_force_dtw(a, b, abs_diff)
        assert got == expected or abs(got - expected) <= 1e-9 * abs(expected)


class TestBacktrack:
    def test_single_cell_path(self):
        assert backtrack(dtw([0.0], [0.5])) == [(1, 1)]

    def test_identical_sequences_pure_diagonal(self):
        path = backtrack(dtw([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
        assert path == [(1, 1), (2, 2), (3, 3)]

    def test_path_structure(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            a, b = increasing_seq(rng), increasing_seq(rng)
            c = dtw(a, b)
            path = backtrack(c)
            assert path[0] == (1, 1) and path[-1] == (c.n, c.m)
            for (i0, j0), (i1, j1) in zip(path, path[1:]):
                assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}

    def test_path_cost_achieves_total(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            a, b = increasing_seq(rng), increasing_seq(rng)
            c = dtw(a, b)
            path = backtrack(c)
            path_cost = math.fsum(abs(a[i - 1] - b[j - 1]) for i, j in path)
            assert path_cost == pytest.approx(c.total_cost, rel=1e-12, abs=1e-12)


def _scan(t):
    return WifiScan(t=t, readings={AP: -50.0})


def _odom(t, x=0.0):
    return OdometrySample(t=t, pose=Pose2D(x, 0.0))


class TestMatchScans:
    def test_nearest_timestamp_wins(self):
        res = match_scans([_scan(0.5)], [_odom(0.0), _odom(0.49), _odom(1.0)])
        assert res.matches == ((0, 1),)

    def test_identical_timestamps_identity_matching(self):
        ts = [0.0, 1.0, 2.0]
        res = match_scans([_scan(t) for t in ts], [_odom(t) for t in ts])
        assert res.matches == ((0, 0), (1, 1), (2, 2))
        assert res.total_cost == 0.0

    def test_monotone_odometry_indices(self):
        rng = np.random.default_rng(8)
        scans = [_scan(t) for t in np.sort(rng.uniform(0, 30, size=12))]
        odometry = [_odom(t) for t in np.sort(rng.uniform(0, 30, size=80))]
        res = match_scans(scans, odometry)
        js = [j for _, j in res.matches]
        assert js == sorted(js)

    def test_out_of_span_scans_flagged_and_kept(self):
        scans = [_scan(-1.0), _scan(0.5), _scan(9.0)]
        odometry = [_odom(t) for t in np.arange(0.0, 5.0, 0.5)]
        res = match_scans(scans, odometry)
        assert res.out_of_span_scans == (0, 2)
        assert len(res.matches) == 3
        assert res.matches[0][1] == 0
        assert res.matches[2][1] == len(odometry) - 1

    def test_offset_scans_match_within_half_odometry_period(self):
        # 1 Hz scans offset 0.3 s against 100 Hz odometry, simulated.
        plan = Floorplan(width=25.0, height=2.0)
        cfg = SurveyConfig(scan_start_offset_s=0.3)
        from wifiloc.simulator import AccessPointSpec

        ap = AccessPointSpec(id=AP, position=Pose2D(12.0, 1.0))
        rec = drive_continuous(plan, [ap], [Pose2D(0.5, 1.0), Pose2D(20.5, 1.0)], 1.0, cfg)
        res = match_scans(rec.scans, rec.odometry)
        for i, j in res.matches:
            assert abs(rec.scans[i].t - rec.odometry[j].t) <= 0.005 + 1e-12

    def test_empty_inputs_propagate_error(self):
        with pytest.raises(ValueError, match="empty sequence"):
            match_scans([], [_odom(0.0)])
