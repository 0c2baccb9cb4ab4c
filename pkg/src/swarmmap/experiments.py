"""Scripted experiments: the beta/delta phase sweep, perception of a cross,
and adaptation after a habitat change.

Each experiment is a pure function of its parameters and seed list. The
``*_artifacts`` helpers turn results into ``{filename: bytes}`` maps; writing
them to disk is left to the caller.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from . import io as sio
from .engine import (
    MetricsRecord,
    init_state,
    on_target_ratio,
    run,
    spatial_entropy,
    step,
    swap_habitat,
)
from .errors import DomainError
from .model import Habitat, Params

# Pure trail-following regime on a featureless habitat.
SWEEP_PARAMS = Params(beta=3.5, delta=0.2, eta=0.2, p=0.0, evap=0.99, n_ants=400)

# Similarity-driven deposition used for the perception experiments.
PERCEPTION_PARAMS = Params(
    beta=3.5, delta=0.2, eta=0.01, p=1.0, evap=0.99, n_ants=400,
    window_radius=1, metric="ulam", coupling="similarity",
)

# Same, but depositing in proportion to 1 - similarity, so that heterogeneous
# regions rather than flat ones get marked.
CONTRAST_PARAMS = PERCEPTION_PARAMS.replace(coupling="contrast")

SWEEP_BETAS = (0.5, 1.5, 2.5, 3.5, 5.0)
SWEEP_DELTAS = (0.05, 0.2, 0.5)


@dataclass
class SweepCell:
    beta: float
    delta: float
    final_entropy: float
    entropy_drop: float
    ordered: bool
    final_entropies: list[float]
    entropy_drops: list[float]

    @property
    def classification(self) -> str:
        return "ordered" if self.ordered else "disordered"


@dataclass
class SweepResult:
    betas: tuple[float, ...]
    deltas: tuple[float, ...]
    threshold: float
    cells: dict[tuple[float, float], SweepCell]

    def ordered(self, beta: float, delta: float) -> bool:
        return self.cells[(beta, delta)].ordered

    def beta_monotone(self) -> bool:
        """True if, for every delta, order once reached persists for all larger beta."""
        for delta in self.deltas:
            flags = [self.ordered(beta, delta) for beta in sorted(self.betas)]
            if any(a and not b for a, b in zip(flags, flags[1:])):
                return False
        return True

    def any_ordered(self) -> bool:
        return any(cell.ordered for cell in self.cells.values())

    def to_csv(self) -> bytes:
        lines = ["beta,delta,final_entropy,entropy_drop,classification"]
        for delta in self.deltas:
            for beta in self.betas:
                cell = self.cells[(beta, delta)]
                lines.append(
                    f"{beta!r},{delta!r},{cell.final_entropy:.9g},"
                    f"{cell.entropy_drop:.9g},{cell.classification}"
                )
        return ("\n".join(lines) + "\n").encode("ascii")


def entropy_drop(habitat: Habitat, params: Params, seed: int, steps: int, baseline_t: int):
    """Run once and return ``(final_entropy, entropy(t=baseline_t) - final_entropy)``."""
    if not 0 < baseline_t <= steps:
        raise DomainError(f"baseline_t must be in 1..steps, got {baseline_t}")
    state = init_state(habitat, params, seed)
    baseline = None
    for t in range(1, steps + 1):
        step(state)
        if t == baseline_t:
            baseline = spatial_entropy(state.field)
    final = spatial_entropy(state.field)
    return final, baseline - final


def sweep_phase(
    betas: Sequence[float] = SWEEP_BETAS,
    deltas: Sequence[float] = SWEEP_DELTAS,
    steps: int = 1000,
    seeds: Sequence[int] = range(5),
    params: Params = SWEEP_PARAMS,
    dims: tuple[int, int] = (100, 100),
    baseline_t: int = 10,
    threshold_fraction: float = 0.15,
    background: int = 128,
) -> SweepResult:
    """Classify each (beta, delta) pair by the median entropy drop on a
    constant habitat.

    A cell is ordered when the median drop from ``t = baseline_t`` to the end
    is at least ``threshold_fraction * ln(H*W)``. Deposition is forced to the
    constant ``eta`` (``p = 0``).
    """
    betas, deltas, seeds = tuple(betas), tuple(deltas), tuple(seeds)
    if not betas or not deltas or not seeds:
        raise DomainError("beta list, delta list and seeds must be non-empty")
    if params.eta <= 0:
        raise DomainError("the sweep needs eta > 0")
    habitat = Habitat.constant(dims[0], dims[1], background)
    threshold = threshold_fraction * math.log(dims[0] * dims[1])
    cells = {}
    for delta in deltas:
        for beta in betas:
            cell_params = params.replace(beta=beta, delta=delta, p=0.0)
            runs = [entropy_drop(habitat, cell_params, s, steps, baseline_t) for s in seeds]
            finals = [r[0] for r in runs]
            drops = [r[1] for r in runs]
            drop = statistics.median(drops)
            cells[(beta, delta)] = SweepCell(
                beta, delta, statistics.median(finals), drop, drop >= threshold, finals, drops
            )
    return SweepResult(betas, deltas, threshold, cells)


@dataclass
class CrossRun:
    seed: int
    records: list[MetricsRecord]
    final_field: np.ndarray

    @property
    def final_ratio(self) -> float:
        return self.records[-1].on_target_ratio


@dataclass
class CrossResult:
    habitat: Habitat
    mask: np.ndarray
    params: Params
    runs: list[CrossRun]

    @property
    def final_ratios(self) -> list[float]:
        return [r.final_ratio for r in self.runs]

    @property
    def median_ratio(self) -> float:
        ratios = self.final_ratios
        if any(math.isnan(r) for r in ratios):
            return math.nan
        return statistics.median(ratios)


def cross_perception(
    habitat: Habitat,
    mask: np.ndarray,
    params: Params = PERCEPTION_PARAMS,
    steps: int = 1000,
    seeds: Sequence[int] = range(10),
    record_every: int = 10,
) -> CrossResult:
    """Run the colony on ``habitat`` and track the on-target ratio for ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != habitat.shape:
        raise DomainError(f"mask {mask.shape} does not match habitat {habitat.shape}")
    runs = []
    for seed in seeds:
        result = run(init_state(habitat, params, seed), steps, record_every, mask=mask)
        runs.append(CrossRun(seed, result.records, result.state.field.sigma.copy()))
    return CrossResult(habitat, mask, params, runs)


def time_to_threshold(state, mask: np.ndarray, threshold: float, max_steps: int) -> int:
    """Steps until the on-target ratio first reaches ``threshold``.

    Checked after every step, starting with the first one; returns
    ``max_steps + 1`` if the threshold is never reached.
    """
    for k in range(1, max_steps + 1):
        step(state)
        ratio = on_target_ratio(state.field, mask)
        if not math.isnan(ratio) and ratio >= threshold:
            return k
    return max_steps + 1


@dataclass
class TransitionPair:
    seed: int
    after_learning: int
    from_scratch: int


@dataclass
class TransitionResult:
    swap_t: int
    threshold: float
    max_steps: int
    pairs: list[TransitionPair] = field(default_factory=list)

    @property
    def median_after_learning(self) -> float:
        return statistics.median(p.after_learning for p in self.pairs)

    @property
    def median_from_scratch(self) -> float:
        return statistics.median(p.from_scratch for p in self.pairs)

    def sign_test(self) -> tuple[int, int, float]:
        """Two-sided paired sign test, ties dropped.

        Returns ``(n_slower_after_learning, n_untied, p_value)``; with no
        untied pairs the p-value is 1.
        """
        diffs = [p.after_learning - p.from_scratch for p in self.pairs]
        slower = sum(d > 0 for d in diffs)
        untied = sum(d != 0 for d in diffs)
        if untied == 0:
            return 0, 0, 1.0
        return slower, untied, float(binomtest(slower, untied, 0.5).pvalue)

    def to_csv(self) -> bytes:
        lines = ["seed,after_learning,from_scratch"]
        lines += [f"{p.seed},{p.after_learning},{p.from_scratch}" for p in self.pairs]
        slower, untied, pvalue = self.sign_test()
        lines.append(f"median,{self.median_after_learning:g},{self.median_from_scratch:g}")
        lines.append(f"# sign test: {slower}/{untied} slower after learning, p={pvalue:.6g}")
        return ("\n".join(lines) + "\n").encode("ascii")


def habitat_transition(
    habitat_a: Habitat,
    habitat_b: Habitat,
    mask_b: np.ndarray,
    params: Params = PERCEPTION_PARAMS,
    swap_t: int = 500,
    seeds: Sequence[int] = range(20),
    threshold: float = 2.0,
    max_steps: int = 1000,
) -> TransitionResult:
    """Compare adaptation to ``habitat_b`` with and without prior exposure to ``habitat_a``.

    For each seed, one colony lives on A for ``swap_t`` steps and is then
    moved to B; a second colony with the same seed starts fresh on B. Both
    are timed until their on-target ratio on ``mask_b`` reaches ``threshold``.
    """
    if habitat_a.shape != habitat_b.shape:
        raise DomainError(f"habitats differ in size: {habitat_a.shape} vs {habitat_b.shape}")
    if swap_t < 0:
        raise DomainError(f"swap_t must be >= 0, got {swap_t}")
    mask_b = np.asarray(mask_b, dtype=bool)
    result = TransitionResult(swap_t, threshold, max_steps)
    for seed in seeds:
        learned = init_state(habitat_a, params, seed)
        for _ in range(swap_t):
            step(learned)
        swap_habitat(learned, habitat_b)
        after = time_to_threshold(learned, mask_b, threshold, max_steps)
        fresh = time_to_threshold(init_state(habitat_b, params, seed), mask_b, threshold, max_steps)
        result.pairs.append(TransitionPair(seed, after, fresh))
    return result


def final_map_artifacts(tag: str, field_sigma: np.ndarray, records: Optional[list] = None) -> dict:
    """Norm16 PGM map, raw dump and (optionally) metrics CSV for one run."""
    out = {
        f"map-{tag}.pgm": sio.write_pgm(field_sigma, "norm16"),
        f"field-{tag}.swrm": sio.write_field_raw(field_sigma),
    }
    if records is not None:
        out[f"metrics-{tag}.csv"] = sio.write_metrics_csv(records)
    return out


def cross_artifacts(result: CrossResult, config_hash: str) -> dict:
    out = {f"habitat-{config_hash}.pgm": sio.write_pgm(result.habitat)}
    for r in result.runs:
        out.update(final_map_artifacts(f"{config_hash}-seed{r.seed}", r.final_field, r.records))
    ratios = "\n".join(f"{r.seed},{_ratio_text(r.final_ratio)}" for r in result.runs)
    out[f"ratios-{config_hash}.csv"] = (
        f"seed,on_target_ratio\n{ratios}\nmedian,{_ratio_text(result.median_ratio)}\n"
    ).encode("ascii")
    return out


def _ratio_text(value: float) -> str:
    return sio.UNDEFINED if math.isnan(value) else f"{value:.9g}"

