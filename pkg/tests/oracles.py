"""Independent reference implementations used to check the real ones.

These deliberately share no code with the package: the DTW oracle
enumerates every monotone warping path, the MLP oracle multiplies matrices
by hand, and gradients come from central finite differences.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


def brute_force_dtw(
    a: Sequence[float], b: Sequence[float], dist: Callable[[float, float], float]
) -> float:
    """Minimum path cost by exhaustive enumeration (small n, m only).

    Paths start at (1, 1), end at (len(a), len(b)) and step by (1, 0),
    (0, 1) or (1, 1); each visited cell contributes dist(a_i, b_j) once,
    accumulated in path order.
    """
    n, m = len(a), len(b)
    best = math.inf

    stack = [(1, 1, dist(a[0], b[0]))]
    while stack:
        i, j, acc = stack.pop()
        if i == n and j == m:
            if acc < best:
                best = acc
            continue
        if i < n:
            stack.append((i + 1, j, acc + dist(a[i], b[j - 1])))
        if j < m:
            stack.append((i, j + 1, acc + dist(a[i - 1], b[j])))
        if i < n and j < m:
            stack.append((i + 1, j + 1, acc + dist(a[i], b[j])))
    return best


def manual_mlp_forward(
    x: np.ndarray,
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    activations: Sequence[str],
) -> np.ndarray:
    """Row-by-row, neuron-by-neuron forward pass with plain Python loops."""
    out_rows = []
    for row in np.asarray(x, dtype=float):
        h = list(row)
        for w, b, tag in zip(weights, biases, activations):
            nxt = []
            for k in range(w.shape[1]):
                z = b[k]
                for i in range(w.shape[0]):
                    z += h[i] * w[i, k]
                nxt.append(max(z, 0.0) if tag == "relu" else z)
            h = nxt
        out_rows.append(h)
    return np.array(out_rows)


def finite_difference_grads(loss_fn, params: list[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of loss_fn() w.r.t. each array in params.

    loss_fn reads the (mutated in place) params and returns a scalar.
    """
    grads = []
    for arr in params:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            up = loss_fn()
            flat[idx] = original - h
            down = loss_fn()
            flat[idx] = original
            gflat[idx] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """max |a - b| / max(|a|, |b|, floor), elementwise."""
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
