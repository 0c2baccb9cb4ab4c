"""Domain types and the per-ant stochastic transition rule.

An ant sits on a cell of a toroidal square lattice with one of eight
headings. Each step it moves to one of its eight Moore neighbours with
probability proportional to ``W(sigma) * w(turn)``: the pheromone weight of
the target cell times a penalty on the turn angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from .errors import DomainError

METRICS = ("statistical", "ulam")
COUPLINGS = ("similarity", "contrast")


class Direction(IntEnum):
    """Compass headings, counterclockwise from east.

    Offsets are ``(d_row, d_col)`` with rows growing downwards, so north is
    ``(-1, 0)``.
    """

    E = 0
    NE = 1
    N = 2
    NW = 3
    W = 4
    SW = 5
    S = 6
    SE = 7

    @property
    def offset(self) -> tuple[int, int]:
        return OFFSETS[self]


OFFSETS: tuple[tuple[int, int], ...] = (
    (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1),
)
ROW_OFFSETS = np.array([o[0] for o in OFFSETS], dtype=np.int64)
COL_OFFSETS = np.array([o[1] for o in OFFSETS], dtype=np.int64)

_TURN_WEIGHTS = (Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 12), Fraction(1, 20))


def turn_steps(heading: int, direction: int) -> int:
    """Minimal angular difference between two headings in 45 degree steps."""
    d = abs(int(heading) - int(direction)) % 8
    return min(d, 8 - d)


def directional_weight(delta_steps: int) -> Fraction:
    """Turn penalty ``w`` for a heading change of ``delta_steps`` * 45 degrees.

    Returned as an exact rational so it can be compared with the tabulated
    values without rounding.
    """
    if isinstance(delta_steps, bool) or not isinstance(delta_steps, (int, np.integer)):
        raise DomainError(f"turn must be an integer, got {delta_steps!r}")
    if not 0 <= delta_steps <= 4:
        raise DomainError(f"turn must be in 0..4, got {delta_steps}")
    return _TURN_WEIGHTS[delta_steps]


# TURN_MATRIX[h, d] = w(turn from heading h to direction d), as floats.
TURN_MATRIX = np.array(
    [[float(directional_weight(turn_steps(h, d))) for d in range(8)] for h in range(8)]
)


def _check_nonneg(name, value):
    if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value)):
        raise DomainError(f"{name} must be a finite number, got {value!r}")
    if value < 0:
        raise DomainError(f"{name} must be >= 0, got {value!r}")


def pheromone_weight(sigma: float, beta: float, delta: float) -> float:
    """Pheromone weighing function ``W(sigma) = (1 + sigma/(1 + delta*sigma))**beta``.

    Evaluated as ``exp(beta * log1p(...))`` so that large exponents fail
    loudly instead of silently overflowing.
    """
    _check_nonneg("sigma", sigma)
    _check_nonneg("beta", beta)
    _check_nonneg("delta", delta)
    if not beta:
        return 1.0
    try:
        value = math.exp(beta * math.log1p(sigma / (1.0 + delta * sigma)))
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise DomainError(f"W(sigma={sigma}) overflows for beta={beta}, delta={delta}")
    return value


def pheromone_weights(sigma: np.ndarray, beta: float, delta: float) -> np.ndarray:
    """Vectorised :func:`pheromone_weight` over an array of densities."""
    if beta == 0:
        return np.ones_like(sigma, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(beta * np.log1p(sigma / (1.0 + delta * sigma)))
    if not np.all(np.isfinite(out)):
        raise DomainError(f"W(sigma) is not finite for beta={beta}, delta={delta}")
    return out


@dataclass(frozen=True, eq=False)
class Habitat:
    """Immutable grey-level image the colony lives on."""

    grey: np.ndarray

    def __post_init__(self):
        grey = np.asarray(self.grey)
        if grey.ndim != 2:
            raise DomainError(f"habitat must be 2-D, got shape {grey.shape}")
        if grey.shape[0] < 3 or grey.shape[1] < 3:
            raise DomainError(f"habitat must be at least 3x3, got {grey.shape}")
        if not np.issubdtype(grey.dtype, np.integer):
            if not np.all(np.isfinite(grey)) or np.any(grey != np.round(grey)):
                raise DomainError("habitat grey values must be integers")
        if grey.size and (grey.min() < 0 or grey.max() > 255):
            raise DomainError("habitat grey values must lie in [0, 255]")
        grey = grey.astype(np.uint8)
        grey.setflags(write=False)
        object.__setattr__(self, "grey", grey)

    @classmethod
    def constant(cls, height: int, width: int, value: int = 128) -> Habitat:
        return cls(np.full((height, width), value, dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.grey.shape[0]

    @property
    def width(self) -> int:
        return self.grey.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.grey.shape

    def __eq__(self, other):
        if not isinstance(other, Habitat):
            return NotImplemented
        return np.array_equal(self.grey, other.grey)

    __hash__ = None


@dataclass(eq=False)
class PheromoneField:
    """Mutable grid of non-negative pheromone densities."""

    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.float64)
        if sigma.ndim != 2:
            raise DomainError(f"field must be 2-D, got shape {sigma.shape}")
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise DomainError("pheromone densities must be finite and >= 0")
        self.sigma = sigma

    @classmethod
    def zeros(cls, height: int, width: int) -> PheromoneField:
        return cls(np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.sigma.shape[0]

    @property
    def width(self) -> int:
        return self.sigma.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.sigma.shape

    def total(self) -> float:
        return float(self.sigma.sum())

    def copy(self) -> PheromoneField:
        return PheromoneField(self.sigma.copy())

    def __eq__(self, other):
        if not isinstance(other, PheromoneField):
            return NotImplemented
        return np.array_equal(self.sigma, other.sigma)

    __hash__ = None


@dataclass(frozen=True)
class AntState:
    position: tuple[int, int]
    heading: Direction

    def __post_init__(self):
        object.__setattr__(self, "heading", Direction(self.heading))


@dataclass(frozen=True)
class Params:
    """Model constants.

    ``coupling`` selects what the deposition term is proportional to: the
    window similarity itself (``"similarity"``) or its complement
    ``1 - similarity`` (``"contrast"``), which rewards moves across
    heterogeneous grey-level structure.
    """

    beta: float = 3.5
    delta: float = 0.2
    eta: float = 0.2
    p: float = 0.0
    evap: float = 0.99
    n_ants: int = 400
    window_radius: int = 1
    a: float = 1 / 3
    b: float = 1 / 3
    c: float = 1 / 3
    metric: str = "ulam"
    coupling: str = "similarity"

    def __post_init__(self):
        for name in ("beta", "delta", "eta", "p", "evap", "a", "b", "c"):
            _check_nonneg(name, getattr(self, name))
        if self.evap > 1:
            raise DomainError(f"evap must be in [0, 1], got {self.evap}")
        if abs(self.a + self.b + self.c - 1.0) > 1e-12:
            raise DomainError(
                f"metric weights must sum to 1, got a+b+c={self.a + self.b + self.c!r}"
            )
        for name in ("n_ants", "window_radius"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if self.metric not in METRICS:
            raise DomainError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.coupling not in COUPLINGS:
            raise DomainError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")

    def replace(self, **changes) -> Params:
        from dataclasses import replace

        return replace(self, **changes)


def transition_matrix(
    rows: np.ndarray,
    cols: np.ndarray,
    headings: np.ndarray,
    sigma: np.ndarray,
    beta: float,
    delta: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Move probabilities for a batch of ants.

    Returns ``(probs, target_rows, target_cols)``, each of shape
    ``(n_ants, 8)`` and indexed by :class:`Direction`.
    """
    height, width = sigma.shape
    target_rows = (rows[:, None] + ROW_OFFSETS) % height
    target_cols = (cols[:, None] + COL_OFFSETS) % width
    weights = pheromone_weights(sigma[target_rows, target_cols], beta, delta)
    weights *= TURN_MATRIX[headings]
    norm = weights.sum(axis=1, keepdims=True)
    if not np.all(norm > 0):
        raise RuntimeError("transition normaliser vanished")
    return weights / norm, target_rows, target_cols


def transition_probabilities(ant: AntState, field: PheromoneField, params: Params) -> np.ndarray:
    """Probability of moving in each of the 8 directions, indexed by Direction."""
    row, col = ant.position
    if not (0 <= row < field.height and 0 <= col < field.width):
        raise DomainError(f"ant position {ant.position} outside {field.shape} grid")
    probs, _, _ = transition_matrix(
        np.array([row]), np.array([col]), np.array([int(ant.heading)]),
        field.sigma, params.beta, params.delta,
    )
    return probs[0]


def choose(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF choice in fixed index order, row-wise.

    ``u`` holds one uniform in [0, 1) per row. If rounding leaves ``u`` above
    the last cumulative value, the last index with positive mass wins.
    """
    cdf = np.cumsum(probs, axis=1)
    idx = np.sum(cdf <= u[:, None], axis=1)
    overflow = idx >= probs.shape[1]
    if np.any(overflow):
        last_positive = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
        idx = np.where(overflow, last_positive, idx)
    return idx


def sample_move(probs, rng: np.random.Generator) -> Direction:
    """Draw a direction from an 8-vector of probabilities using one uniform."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (8,) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise DomainError("probs must be a non-negative 8-vector summing to 1")
    u = rng.random()
    return Direction(int(choose(probs[None, :], np.array([u]))[0]))
