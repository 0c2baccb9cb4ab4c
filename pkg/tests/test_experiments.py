import math

import numpy as np
import pytest

from swarmmap.errors import DomainError
from swarmmap.experiments import (
    CONTRAST_PARAMS,
    PERCEPTION_PARAMS,
    SWEEP_PARAMS,
    TransitionPair,
    TransitionResult,
    cross_artifacts,
    cross_perception,
    habitat_transition,
    sweep_phase,
)
from swarmmap.habitats import generate_cross

SMALL = CONTRAST_PARAMS.replace(n_ants=60)


def small_sweep(**kwargs):
    args = dict(
        betas=(0.0, 3.5, 5.0), deltas=(0.05,), steps=300, seeds=range(2),
        params=SWEEP_PARAMS.replace(n_ants=100), dims=(30, 30),
    )
    args.update(kwargs)
    return sweep_phase(**args)


def test_small_sweep_orders_at_high_beta():
    result = small_sweep()
    assert not result.ordered(0.0, 0.05)
    assert result.ordered(5.0, 0.05)
    assert result.beta_monotone()
    assert result.threshold == pytest.approx(0.15 * math.log(900))


def test_sweep_is_deterministic_and_exports():
    a, b = small_sweep(betas=(0.0, 2.0)), small_sweep(betas=(0.0, 2.0))
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().decode().splitlines()
    assert lines[0] == "beta,delta,final_entropy,entropy_drop,classification"
    assert len(lines) == 3


def test_beta_monotone_detects_reversal():
    result = small_sweep(betas=(0.0, 5.0))
    result.cells[(0.0, 0.05)].ordered = True
    result.cells[(5.0, 0.05)].ordered = False
    assert not result.beta_monotone()


def test_sweep_validation():
    with pytest.raises(DomainError):
        sweep_phase(betas=(), deltas=(0.1,))
    with pytest.raises(DomainError):
        sweep_phase(betas=(1.0,), deltas=(0.1,), steps=5, baseline_t=10, dims=(5, 5))


def test_cross_perception_small():
    habitat, mask = generate_cross((30, 30), 10, seed=0)
    result = cross_perception(habitat, mask, SMALL, steps=200, seeds=range(3), record_every=50)
    assert all(r > 2.0 for r in result.final_ratios)
    assert [rec.t for rec in result.runs[0].records] == [0, 50, 100, 150, 200]
    null = cross_perception(habitat, mask, SMALL.replace(p=0.0, beta=0.0), steps=200, seeds=range(3))
    assert 0.7 < null.median_ratio < 1.3


def test_similarity_coupling_marks_flat_background():
    # flat windows match perfectly, so the literal coupling deposits most off the figure
    habitat, mask = generate_cross((30, 30), 10, seed=0)
    params = PERCEPTION_PARAMS.replace(n_ants=60)
    result = cross_perception(habitat, mask, params, steps=200, seeds=range(3))
    assert all(r < 1.0 for r in result.final_ratios)


def test_cross_degenerate_mask_is_undefined():
    habitat, mask = generate_cross((12, 12), 12, seed=0)
    result = cross_perception(habitat, mask, SMALL.replace(n_ants=10), steps=20, seeds=range(2))
    assert math.isnan(result.median_ratio)
    files = cross_artifacts(result, "abc")
    assert files["ratios-abc.csv"].decode().splitlines()[-1] == "median,undefined"
    assert b"undefined" in files["metrics-abc-seed0.csv"]


def test_cross_mask_shape_checked():
    habitat, mask = generate_cross((12, 12), 4, seed=0)
    with pytest.raises(DomainError):
        cross_perception(habitat, mask[:-1], SMALL, steps=1, seeds=[0])


def test_transition_null_ties():
    habitat, mask = generate_cross((24, 24), 8, seed=0, inverted=True)
    result = habitat_transition(habitat, habitat, mask, SMALL, swap_t=50, seeds=range(4), max_steps=100)
    assert result.sign_test()[2] >= 0.05


def test_transition_swap_at_zero_equals_fresh():
    a, _ = generate_cross((24, 24), 8, seed=0)
    b, mask_b = generate_cross((24, 24), 8, seed=0, inverted=True)
    result = habitat_transition(a, b, mask_b, SMALL, swap_t=0, seeds=range(3), max_steps=100)
    assert all(p.after_learning == p.from_scratch for p in result.pairs)


def test_transition_learning_slows_adaptation():
    a, _ = generate_cross((30, 30), 10, seed=0)
    b, mask_b = generate_cross((30, 30), 10, seed=0, inverted=True)
    result = habitat_transition(a, b, mask_b, SMALL, swap_t=200, seeds=range(3), max_steps=400)
    assert result.median_after_learning > result.median_from_scratch
    assert habitat_transition(a, b, mask_b, SMALL, swap_t=200, seeds=range(3), max_steps=400).to_csv() == result.to_csv()


def test_sign_test_values():
    result = TransitionResult(500, 2.0, 1000, [TransitionPair(s, 10 + s, 1) for s in range(10)])
    slower, untied, pvalue = result.sign_test()
    assert (slower, untied) == (10, 10)
    assert pvalue == pytest.approx(2 / 2**10)
    tied = TransitionResult(500, 2.0, 1000, [TransitionPair(s, 3, 3) for s in range(5)])
    assert tied.sign_test() == (0, 0, 1.0)
    assert tied.to_csv().decode().splitlines()[-1] == "# sign test: 0/0 slower after learning, p=1"


def test_transition_validation():
    a, mask = generate_cross((12, 12), 4, seed=0)
    b, _ = generate_cross((12, 13), 4, seed=0)
    with pytest.raises(DomainError):
        habitat_transition(a, b, mask, SMALL, seeds=[0])
    with pytest.raises(DomainError):
        habitat_transition(a, a, mask, SMALL, swap_t=-1, seeds=[0])


def test_perception_defaults():
    assert PERCEPTION_PARAMS.coupling == "similarity" and PERCEPTION_PARAMS.p > 0
    assert CONTRAST_PARAMS == PERCEPTION_PARAMS.replace(coupling="contrast")
    assert SWEEP_PARAMS.p == 0 and SWEEP_PARAMS.eta > 0
    assert np.isclose(PERCEPTION_PARAMS.a + PERCEPTION_PARAMS.b + PERCEPTION_PARAMS.c, 1.0)
