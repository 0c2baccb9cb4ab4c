"""Similarity between grey-level windows.

Two measures are provided, both returning a value in [0, 1] with 1 meaning
"identical":

* an ordinal measure based on the Ulam distance between the rank
  permutations of the two windows, and
* a statistical measure mixing differences of mean, variance and value
  multisets.

:func:`neighbor_similarity` evaluates either measure between every cell's
window and each of its eight neighbours' windows in one vectorised pass;
the engine uses that table so nothing is recomputed per step.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import COL_OFFSETS, ROW_OFFSETS, Habitat

MAX_GREY = 255
# Largest possible |mean1 - mean2| and |var1 - var2| for values in [0, 255].
MAX_MEAN_DIFF = float(MAX_GREY)
MAX_VAR_DIFF = MAX_GREY**2 / 4


@dataclass(frozen=True, eq=False)
class Window:
    """Square block of grey values in raster order."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == 2:
            if values.shape[0] != values.shape[1]:
                raise DomainError(f"window must be square, got {values.shape}")
            values = values.ravel()
        side = int(round(np.sqrt(values.size)))
        if side * side != values.size or side < 3 or side % 2 == 0:
            raise DomainError(f"window side must be odd and >= 3, got {values.size} values")
        if values.min() < 0 or values.max() > MAX_GREY:
            raise DomainError("window values must lie in [0, 255]")
        values = values.astype(np.int64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def side(self) -> int:
        return int(round(np.sqrt(self.values.size)))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Window):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


def window_extract(habitat: Habitat, center: tuple[int, int], radius: int) -> Window:
    """Window of side ``2*radius + 1`` around ``center``, wrapping at the edges."""
    if radius < 1:
        raise DomainError(f"radius must be >= 1, got {radius}")
    row, col = center
    span = np.arange(-radius, radius + 1)
    rows = (row + span) % habitat.height
    cols = (col + span) % habitat.width
    return Window(habitat.grey[np.ix_(rows, cols)])


def ordinal_rank(values) -> tuple[int, ...]:
    """Rank of each raster position by intensity, 1-based.

    Ties keep raster order, so the result is always a permutation of 1..n.
    """
    if isinstance(values, Window):
        values = values.values
    order = np.argsort(np.asarray(values), kind="stable")
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = np.arange(1, order.size + 1)
    return tuple(int(r) for r in ranks)


def _check_permutation(p):
    if sorted(p) != list(range(1, len(p) + 1)):
        raise DomainError(f"not a permutation of 1..{len(p)}: {p!r}")


def longest_increasing_subsequence(seq) -> int:
    """Length of the longest strictly increasing subsequence (patience sorting)."""
    tails = []
    for x in seq:
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def ulam_distance(p, q) -> int:
    """Ulam distance between two permutations of 1..n.

    The minimum number of element moves turning one into the other, i.e.
    ``n - LIS(q o p^-1)``.
    """
    p, q = tuple(p), tuple(q)
    if len(p) != len(q):
        raise DomainError(f"permutation lengths differ: {len(p)} != {len(q)}")
    _check_permutation(p)
    _check_permutation(q)
    inverse_p = [0] * len(p)
    for position, rank in enumerate(p):
        inverse_p[rank - 1] = position
    return len(p) - longest_increasing_subsequence(q[i] for i in inverse_p)


def _check_pair(w1: Window, w2: Window):
    if len(w1) != len(w2):
        raise DomainError(f"window sizes differ: {w1.side} != {w2.side}")


def ulam_similarity(w1: Window, w2: Window) -> float:
    _check_pair(w1, w2)
    n = len(w1)
    return 1.0 - ulam_distance(ordinal_rank(w1), ordinal_rank(w2)) / (n - 1)


def _check_weights(a, b, c):
    for name, value in (("a", a), ("b", b), ("c", c)):
        if not np.isfinite(value) or value < 0:
            raise DomainError(f"weight {name} must be finite and >= 0, got {value!r}")
    if abs(a + b + c - 1.0) > 1e-12:
        raise DomainError(f"weights must sum to 1, got {a + b + c!r}")


def _stat_terms(sum1, sum2, sq1, sq2, overlap, n):
    # Integer moments keep the mean and variance differences exact up to the
    # final division, so the scalar and vectorised paths agree bit for bit.
    mean_term = np.abs(sum1 - sum2) / (n * MAX_MEAN_DIFF)
    var1 = n * sq1 - sum1 * sum1
    var2 = n * sq2 - sum2 * sum2
    var_term = np.abs(var1 - var2) / (n * n * MAX_VAR_DIFF)
    match_term = (n - overlap) / n
    return mean_term, var_term, match_term


def stat_terms(w1: Window, w2: Window) -> tuple[float, float, float]:
    """Normalised mean, variance and multiset-mismatch differences, each in [0, 1]."""
    _check_pair(w1, w2)
    v1, v2 = w1.values, w2.values
    h1 = np.bincount(v1, minlength=MAX_GREY + 1)
    h2 = np.bincount(v2, minlength=MAX_GREY + 1)
    overlap = int(np.minimum(h1, h2).sum())
    terms = _stat_terms(
        int(v1.sum()), int(v2.sum()), int((v1 * v1).sum()), int((v2 * v2).sum()),
        overlap, len(w1),
    )
    return tuple(float(t) for t in terms)


def stat_similarity(w1: Window, w2: Window, a: float, b: float, c: float) -> float:
    """Weighted statistical similarity ``1 - D`` where D mixes the three difference terms."""
    _check_weights(a, b, c)
    mean_term, var_term, match_term = stat_terms(w1, w2)
    return 1.0 - (a * mean_term + b * var_term + c * match_term) / (a + b + c)


def window_stack(grey: np.ndarray, radius: int) -> np.ndarray:
    """All toroidal windows of a grid: shape ``(H, W, side*side)`` in raster order."""
    grey = np.asarray(grey, dtype=np.int64)
    offsets = range(-radius, radius + 1)
    return np.stack(
        [np.roll(grey, (-dr, -dc), axis=(0, 1)) for dr in offsets for dc in offsets],
        axis=-1,
    )


def _batch_lis(seq: np.ndarray) -> np.ndarray:
    """Row-wise patience sorting; ``seq`` has shape (batch, n)."""
    batch, n = seq.shape
    tails = np.full((batch, n), np.iinfo(np.int64).max, dtype=np.int64)
    rows = np.arange(batch)
    for i in range(n):
        x = seq[:, i]
        pos = np.sum(tails < x[:, None], axis=1)
        tails[rows, pos] = x
    return np.sum(tails != np.iinfo(np.int64).max, axis=1)


def neighbor_similarity(
    habitat: Habitat,
    radius: int,
    metric: str,
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
) -> np.ndarray:
    """Similarity between each cell's window and each neighbour's window.

    Returns ``table`` of shape ``(H, W, 8)`` with ``table[r, c, d]`` equal to
    the similarity of the windows at ``(r, c)`` and at its neighbour in
    direction ``d``.
    """
    if radius < 1:
        raise DomainError(f"radius must be >= 1, got {radius}")
    windows = window_stack(habitat.grey, radius)
    height, width, n = windows.shape
    table = np.empty((height, width, 8))

    if metric == "ulam":
        order = np.argsort(windows, axis=-1, kind="stable")
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(1, n + 1), axis=-1)
        order = order.reshape(-1, n)
        for d in range(8):
            shift = (-ROW_OFFSETS[d], -COL_OFFSETS[d])
            neighbor_ranks = np.roll(ranks, shift, axis=(0, 1)).reshape(-1, n)
            seq = np.take_along_axis(neighbor_ranks, order, axis=1)
            dist = n - _batch_lis(seq)
            table[..., d] = (1.0 - dist / (n - 1)).reshape(height, width)
    elif metric == "statistical":
        a, b, c = weights
        _check_weights(a, b, c)
        sums = windows.sum(axis=-1)
        squares = (windows * windows).sum(axis=-1)
        hist = np.zeros((height * width, MAX_GREY + 1), dtype=np.int16)
        flat = windows.reshape(-1, n)
        np.add.at(hist, (np.repeat(np.arange(height * width), n), flat.ravel()), 1)
        hist = hist.reshape(height, width, -1)
        for d in range(8):
            shift = (-ROW_OFFSETS[d], -COL_OFFSETS[d])
            overlap = np.minimum(hist, np.roll(hist, shift, axis=(0, 1))).sum(axis=-1)
            mean_term, var_term, match_term = _stat_terms(
                sums, np.roll(sums, shift, axis=(0, 1)),
                squares, np.roll(squares, shift, axis=(0, 1)),
                overlap, n,
            )
            table[..., d] = 1.0 - (a * mean_term + b * var_term + c * match_term) / (a + b + c)
    else:
        raise DomainError(f"unknown metric {metric!r}")
    return table
