"""Synchronous simulation loop: sense, move, deposit, evaporate.

All ants sense the field as it was at the start of the step, draw one
uniform each in ant-index order, move, and then deposit ``eta + p * L`` on
their destination cell, where ``L`` compares the grey-level window at the
origin cell with the one at the destination (or ``1 - L`` with the
``"contrast"`` coupling). The whole field is then multiplied by the
retention factor ``evap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import DomainError
from .model import AntState, Direction, Habitat, Params, PheromoneField, choose, transition_matrix
from .similarity import neighbor_similarity


@dataclass
class MetricsRecord:
    t: int
    total_pheromone: float
    spatial_entropy: float
    max_sigma: float
    on_target_ratio: Optional[float] = None


@dataclass(eq=False)
class SimulationState:
    """Everything needed to continue a run.

    Ant positions and headings are held as parallel integer arrays;
    :meth:`ant` gives a single ant as an :class:`AntState`.
    """

    t: int
    habitat: Habitat
    field: PheromoneField
    rows: np.ndarray
    cols: np.ndarray
    headings: np.ndarray
    params: Params
    rng: np.random.Generator
    last_deposit: float = 0.0
    _deposit_table: Optional[np.ndarray] = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.field.shape != self.habitat.shape:
            raise DomainError(f"field {self.field.shape} does not match habitat {self.habitat.shape}")
        n = self.params.n_ants
        for name in ("rows", "cols", "headings"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (n,):
                raise DomainError(f"{name} must have shape ({n},), got {arr.shape}")
            setattr(self, name, arr)
        if np.any((self.rows < 0) | (self.rows >= self.habitat.height)) or np.any(
            (self.cols < 0) | (self.cols >= self.habitat.width)
        ):
            raise DomainError("ant position outside the grid")
        if np.any((self.headings < 0) | (self.headings > 7)):
            raise DomainError("ant heading outside 0..7")

    @property
    def n_ants(self) -> int:
        return self.rows.size

    def ant(self, i: int) -> AntState:
        return AntState((int(self.rows[i]), int(self.cols[i])), Direction(int(self.headings[i])))

    @property
    def ants(self) -> list[AntState]:
        return [self.ant(i) for i in range(self.n_ants)]

    def copy(self) -> SimulationState:
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return SimulationState(
            t=self.t,
            habitat=self.habitat,
            field=self.field.copy(),
            rows=self.rows.copy(),
            cols=self.cols.copy(),
            headings=self.headings.copy(),
            params=self.params,
            rng=rng,
            last_deposit=self.last_deposit,
            _deposit_table=self._deposit_table,
        )

    def deposit_table(self) -> np.ndarray:
        """Per-(cell, direction) deposit amounts for the current habitat."""
        if self._deposit_table is None:
            self._deposit_table = deposit_table(self.habitat, self.params)
        return self._deposit_table


def deposit_table(habitat: Habitat, params: Params) -> np.ndarray:
    """``T = eta + p * coupling(L)`` for a move from each cell in each direction."""
    if params.p == 0:
        return np.full(habitat.shape + (8,), float(params.eta))
    lam = neighbor_similarity(
        habitat, params.window_radius, params.metric, (params.a, params.b, params.c)
    )
    if params.coupling == "contrast":
        lam = 1.0 - lam
    return params.eta + params.p * lam


def init_state(habitat: Habitat, params: Params, seed: int) -> SimulationState:
    """Empty field with ants scattered uniformly at random.

    Draws all rows, then all columns, then all headings; only the habitat's
    dimensions affect the result, never its content.
    """
    if params.n_ants < 1:
        raise DomainError("n_ants must be >= 1")
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(int(seed))
    n = params.n_ants
    rows = rng.integers(0, habitat.height, size=n)
    cols = rng.integers(0, habitat.width, size=n)
    headings = rng.integers(0, 8, size=n)
    return SimulationState(
        t=0,
        habitat=habitat,
        field=PheromoneField.zeros(habitat.height, habitat.width),
        rows=rows,
        cols=cols,
        headings=headings,
        params=params,
        rng=rng,
    )


def step(state: SimulationState) -> SimulationState:
    """Advance ``state`` by one time step in place and return it."""
    params = state.params
    sigma = state.field.sigma
    probs, target_rows, target_cols = transition_matrix(
        state.rows, state.cols, state.headings, sigma, params.beta, params.delta
    )
    u = state.rng.random(state.n_ants)
    moves = choose(probs, u)
    picked = np.arange(state.n_ants)
    deposits = state.deposit_table()[state.rows, state.cols, moves]
    state.rows = target_rows[picked, moves]
    state.cols = target_cols[picked, moves]
    state.headings = moves.astype(np.int64)
    # unbuffered, applied in ant-index order
    np.add.at(sigma, (state.rows, state.cols), deposits)
    sigma *= params.evap
    state.last_deposit = math.fsum(deposits)
    state.t += 1
    return state


def swap_habitat(state: SimulationState, habitat: Habitat) -> SimulationState:
    """Replace the habitat, keeping field, ants and RNG as they are."""
    if habitat.shape != state.habitat.shape:
        raise DomainError(f"new habitat {habitat.shape} differs from {state.habitat.shape}")
    state.habitat = habitat
    state._deposit_table = None
    return state


def spatial_entropy(field) -> float:
    """Shannon entropy (nats) of the field normalised to a distribution.

    An empty field counts as maximally disordered: ``ln(number of cells)``.
    """
    sigma = field.sigma if isinstance(field, PheromoneField) else np.asarray(field, dtype=float)
    total = sigma.sum()
    if total <= 0:
        return math.log(sigma.size)
    q = sigma[sigma > 0] / total
    return float(-np.sum(q * np.log(q)))


def on_target_ratio(field, mask: np.ndarray) -> float:
    """Mean density on ``mask`` over mean density off it.

    The off-mask mean is floored at machine epsilon. Returns NaN when either
    side of the mask is empty.
    """
    sigma = field.sigma if isinstance(field, PheromoneField) else np.asarray(field)
    mask = np.asarray(mask, dtype=bool)
    if mask.all() or not mask.any():
        return math.nan
    off = max(float(sigma[~mask].mean()), np.finfo(float).eps)
    return float(sigma[mask].mean()) / off


def metrics(state: SimulationState, mask: Optional[np.ndarray] = None) -> MetricsRecord:
    sigma = state.field.sigma
    return MetricsRecord(
        t=state.t,
        total_pheromone=float(sigma.sum()),
        spatial_entropy=spatial_entropy(sigma),
        max_sigma=float(sigma.max()),
        on_target_ratio=None if mask is None else on_target_ratio(sigma, mask),
    )


@dataclass
class RunResult:
    state: SimulationState
    records: list[MetricsRecord]
    snapshots: list[tuple[int, np.ndarray]]


def run(
    state: SimulationState,
    n_steps: int,
    snapshot_every: int = 0,
    mask: Optional[np.ndarray] = None,
    keep_fields: bool = False,
) -> RunResult:
    """Step ``n_steps`` times, recording metrics at the start, every
    ``snapshot_every`` steps, and at the end.

    ``snapshot_every = 0`` records only the first and last step. With
    ``keep_fields`` a copy of the field is kept at each record.
    """
    if n_steps < 0:
        raise DomainError(f"n_steps must be >= 0, got {n_steps}")
    if snapshot_every < 0:
        raise DomainError(f"snapshot_every must be >= 0, got {snapshot_every}")
    records, snapshots = [], []

    def record():
        records.append(metrics(state, mask))
        if keep_fields:
            snapshots.append((state.t, state.field.sigma.copy()))

    record()
    for i in range(1, n_steps + 1):
        step(state)
        if (snapshot_every and i % snapshot_every == 0) or i == n_steps:
            record()
    return RunResult(state, records, snapshots)
