"""Slow, obviously-correct reference implementations used only by tests.

None of these import the code paths they check.
"""

import itertools
import math

NEIGHBOURS = [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)]
TURN = {0: 1.0, 1: 0.5, 2: 0.25, 3: 1 / 12, 4: 1 / 20}


def weight(sigma, beta, delta):
    return (1.0 + sigma / (1.0 + delta * sigma)) ** beta


def probabilities(sigma_rows, row, col, heading, beta, delta):
    """Move probabilities from nested lists, one neighbour at a time."""
    h, w = len(sigma_rows), len(sigma_rows[0])
    raw = []
    for d, (dr, dc) in enumerate(NEIGHBOURS):
        turn = min(abs(d - heading) % 8, 8 - abs(d - heading) % 8)
        raw.append(weight(sigma_rows[(row + dr) % h][(col + dc) % w], beta, delta) * TURN[turn])
    total = sum(raw)
    return [x / total for x in raw]


def lis_bruteforce(seq):
    """Longest strictly increasing subsequence by checking every subset."""
    n = len(seq)
    for size in range(n, 0, -1):
        for idx in itertools.combinations(range(n), size):
            if all(seq[idx[i]] < seq[idx[i + 1]] for i in range(size - 1)):
                return size
    return 0


def ulam_bruteforce(p, q):
    """n minus the largest set of positions whose ranks are ordered the same
    way in both permutations, found by trying every subset of positions."""
    n = len(p)
    for keep in range(n, 0, -1):
        for subset in itertools.combinations(range(n), keep):
            if sorted(subset, key=lambda i: p[i]) == sorted(subset, key=lambda i: q[i]):
                return n - keep
    return n


def ranks_by_sort(values):
    """1-based ranks; ties keep raster order."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    ranks = [0] * len(values)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return ranks


def ranks_to_sequence(p, q):
    """q read in the rank order of p, i.e. the relative permutation."""
    order = sorted(range(len(p)), key=lambda i: p[i])
    return [q[i] for i in order]


def entropy(values):
    total = sum(values)
    if total <= 0:
        return math.log(len(values))
    return -sum(v / total * math.log(v / total) for v in values if v > 0)
