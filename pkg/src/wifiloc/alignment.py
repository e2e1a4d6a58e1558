"""Time alignment of the WiFi scan stream against the odometry stream.

The two streams run at different rates (1 Hz scans vs 100 Hz odometry) and
may start at different times, so a direct pairwise match is not possible.
Dynamic time warping over the two timestamp sequences produces a monotone
warping path; from that path each scan is matched to the odometry sample
closest in time.

The cost matrix C is (n+1) x (m+1): C[0][0] = 0, the rest of the border is
+inf, and

    C[i][j] = d(a_i, b_j) + min(C[i-1][j], C[i][j-1], C[i-1][j-1])

with the local cost d defaulting to the absolute timestamp difference in
seconds (the two streams share no coordinate other than time). The default
cost runs through a compiled kernel; at survey scale (hundreds of scans vs
tens of thousands of odometry samples) a full-matrix pass completes in well
under a second.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .core import OdometrySample, WifiScan


@dataclass(frozen=True)
class DtwCostMatrix:
    """Accumulated-cost matrix for sequences of length n and m.

    cells has shape (n+1, m+1); cells[0, 0] is 0 and the remainder of the
    first row and column is +inf. Indices into cells are 1-based with
    respect to the sequences: cells[i, j] covers a[:i] vs b[:j].
    """

    n: int
    m: int
    cells: np.ndarray

    @property
    def total_cost(self) -> float:
        """Alignment cost of the full sequences, i.e. cells[n, m]."""
        return float(self.cells[self.n, self.m])


@dataclass(frozen=True)
class AlignmentResult:
    """Warping path plus the per-scan odometry match derived from it.

    path uses the matrix's 1-based indices, runs from (1, 1) to (n, m) and
    only steps by (1, 0), (0, 1) or (1, 1). matches holds one 0-based
    (scan_index, odometry_index) pair per scan, non-decreasing in the
    odometry index. out_of_span_scans flags scans whose timestamp fell
    outside the odometry time range; they are matched to the boundary
    sample and kept.
    """

    total_cost: float
    path: tuple[tuple[int, int], ...]
    matches: tuple[tuple[int, int], ...]
    out_of_span_scans: tuple[int, ...] = ()


@njit(cache=True)
def _fill_abs_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    cells = np.full((n + 1, m + 1), np.inf)
    cells[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = abs(a[i - 1] - b[j - 1])
            prev = min(cells[i - 1, j], cells[i, j - 1], cells[i - 1, j - 1])
            cells[i, j] = d + prev
    return cells


def _fill_generic(a: np.ndarray, b: np.ndarray, local_cost: Callable[[float, float], float]) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    cells = np.full((n + 1, m + 1), np.inf)
    cells[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = local_cost(a[i - 1], b[j - 1])
            prev = min(cells[i - 1, j], cells[i, j - 1], cells[i - 1, j - 1])
            cells[i, j] = d + prev
    return cells


def _as_increasing_array(seq: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"empty sequence: {name}")
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


def dtw(
    a: Sequence[float],
    b: Sequence[float],
    local_cost: Callable[[float, float], float] | None = None,
) -> DtwCostMatrix:
    """Fill the full accumulated-cost matrix for sequences a and b.

    local_cost defaults to the absolute difference, which dispatches to the
    compiled kernel; any other callable runs the plain-Python recurrence.
    """
    arr_a = _as_increasing_array(a, "a")
    arr_b = _as_increasing_array(b, "b")
    if local_cost is None:
        cells = _fill_abs_cost(arr_a, arr_b)
    else:
        cells = _fill_generic(arr_a, arr_b, local_cost)
    return DtwCostMatrix(n=arr_a.size, m=arr_b.size, cells=cells)


def backtrack(c: DtwCostMatrix) -> list[tuple[int, int]]:
    """Recover a warping path by walking back from (n, m) to (1, 1).

    At each cell the predecessor with the smallest accumulated cost is
    taken; ties break diagonal first, then vertical (i-1, j), then
    horizontal (i, j-1).
    """
    cells = c.cells
    i, j = c.n, c.m
    path = [(i, j)]
    while i > 1 or j > 1:
        diag = cells[i - 1, j - 1]
        vert = cells[i - 1, j]
        horz = cells[i, j - 1]
        best = min(diag, vert, horz)
        if diag == best:
            i, j = i - 1, j - 1
        elif vert == best:
            i = i - 1
        else:
            j = j - 1
        path.append((i, j))
    path.reverse()
    return path


def match_scans(
    scans: Sequence[WifiScan], odometry: Sequence[OdometrySample]
) -> AlignmentResult:
    """Pair every scan with its best odometry sample via the warping path.

    Among a scan's path partners, the odometry sample with the smallest
    absolute timestamp difference wins; the earliest index wins ties.
    Scans outside the odometry time span end up matched to the boundary
    sample and are flagged in out_of_span_scans.
    """
    scan_ts = [s.t for s in scans]
    odom_ts = [o.t for o in odometry]
    matrix = dtw(scan_ts, odom_ts)
    path = backtrack(matrix)

    best_gap: dict[int, float] = {}
    best_j: dict[int, int] = {}
    for i, j in path:
        gap = abs(scan_ts[i - 1] - odom_ts[j - 1])
        if i not in best_gap or gap < best_gap[i]:
            best_gap[i] = gap
            best_j[i] = j - 1

    matches = tuple((i - 1, best_j[i]) for i in range(1, matrix.n + 1))
    out_of_span = tuple(
        idx for idx, t in enumerate(scan_ts) if t < odom_ts[0] or t > odom_ts[-1]
    )
    return AlignmentResult(
        total_cost=matrix.total_cost,
        path=tuple(path),
        matches=matches,
        out_of_span_scans=out_of_span,
    )
