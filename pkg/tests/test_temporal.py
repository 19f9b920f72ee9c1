import math

import numpy as np
import pytest

from routerisk.temporal import (
    IntensityConfig,
    base_intensity,
    burst_statistic,
    damped_intensity,
    events_from_jsonl,
    events_to_jsonl,
)

from .helpers import event

CFG = IntensityConfig()
H = CFG.half_life
DELTA = CFG.excitation_decay


def test_config_defaults():
    assert CFG.burst_coefficient == 0.14
    assert CFG.baseline_threshold == 1.0
    assert CFG.alpha("anything") == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        IntensityConfig(half_life=0.0)
    with pytest.raises(ValueError):
        IntensityConfig(excitation_decay=-1.0)
    with pytest.raises(ValueError):
        IntensityConfig(category_multiplier={"x": 0.0})


# base_intensity -------------------------------------------------------------

def test_base_zero_elapsed():
    assert base_intensity(0, 10.0, [event(10.0, 0, 0.85)]) == pytest.approx(0.85)


def test_base_one_efolding():
    lam = base_intensity(0, 10.0 + H, [event(10.0, 0, 1.0)])
    assert lam == pytest.approx(math.exp(-1), abs=1e-12)


def test_base_two_terms_with_category():
    cfg = IntensityConfig(category_multiplier={"hot": 2.0})
    evs = [event(50.0, 0, 0.5, category="hot"), event(50.0 - H, 0, 1.0)]
    lam = base_intensity(0, 50.0, evs, cfg=cfg)
    assert lam == pytest.approx(1.0 + math.exp(-1), abs=1e-12)


def test_base_empty_is_zero():
    assert base_intensity(0, 1.0, []) == 0.0


def test_base_future_events_excluded():
    assert base_intensity(0, 5.0, [event(6.0, 0, 1.0)]) == 0.0


def test_base_other_node_excluded():
    assert base_intensity(0, 5.0, [event(5.0, 1, 1.0)]) == 0.0


def test_route_filtering():
    evs = [
        event(5.0, 0, 0.5, route_tag="A"),
        event(5.0, 0, 0.25, route_tag=None),
    ]
    assert base_intensity(0, 5.0, evs, route="A") == pytest.approx(0.75)
    assert base_intensity(0, 5.0, evs, route="B") == pytest.approx(0.25)
    assert base_intensity(0, 5.0, evs, route=None) == pytest.approx(0.25)


def test_base_monotone_decay_in_t():
    evs = [event(2.0, 0, 0.7), event(4.0, 0, 0.9)]
    ts = np.linspace(4.0, 60.0, 40)
    vals = [base_intensity(0, t, evs) for t in ts]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_base_additive_over_disjoint_subsets():
    rng = np.random.default_rng(2)
    evs = [event(float(rng.uniform(0, 9)), 0, float(rng.uniform(0, 1))) for _ in range(20)]
    total = base_intensity(0, 10.0, evs)
    part = base_intensity(0, 10.0, evs[:7]) + base_intensity(0, 10.0, evs[7:])
    assert total == pytest.approx(part, abs=1e-12)


# burst_statistic ------------------------------------------------------------

def test_burst_single_event_is_zero():
    assert burst_statistic(0, 10.0, [event(3.0, 0, 1.0)]) == 0.0


def test_burst_gap_of_delta():
    evs = [event(1.0, 0, 1.0), event(1.0 + DELTA, 0, 1.0)]
    assert burst_statistic(0, 50.0, evs) == pytest.approx(math.exp(-1), abs=1e-12)


def test_burst_two_gaps():
    evs = [event(0.0, 0, 1.0), event(DELTA, 0, 1.0), event(3 * DELTA, 0, 1.0)]
    expected = (math.exp(-1) + math.exp(-2)) / 2
    assert burst_statistic(0, 99.0, evs) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.2516, abs=1e-4)


def test_burst_simultaneous_events_contribute_one():
    evs = [event(5.0, 0, 1.0), event(5.0, 0, 0.5)]
    assert burst_statistic(0, 9.0, evs) == 1.0


def test_burst_bounded_fuzz():
    rng = np.random.default_rng(4)
    for _ in range(100):
        evs = [
            event(float(rng.uniform(0, 50)), 0, float(rng.uniform(0, 1)))
            for _ in range(int(rng.integers(0, 10)))
        ]
        b = burst_statistic(0, 60.0, evs)
        assert 0.0 <= b <= 1.0


# damped_intensity -----------------------------------------------------------

def test_damped_no_events():
    ni = damped_intensity(0, 5.0, [])
    assert ni.base == ni.burst == ni.mean_decayed == ni.damped == 0.0
    assert ni.event_count == 0


def test_damped_single_event_equals_base():
    ni = damped_intensity(0, 9.0, [event(8.0, 0, 0.6)])
    assert ni.burst == 0.0
    assert ni.damped == pytest.approx(ni.base, abs=1e-15)


def test_damped_two_event_worked_case():
    # two events at gap delta with h = delta: each factor evaluated on its own
    cfg = IntensityConfig(half_life=DELTA, excitation_decay=DELTA)
    t = 30.0
    evs = [event(t - DELTA, 0, 1.0), event(t, 0, 1.0)]
    ni = damped_intensity(0, t, evs, cfg=cfg)
    lam = 1.0 + math.exp(-1)
    assert ni.base == pytest.approx(lam, abs=1e-12)
    assert ni.mean_decayed == pytest.approx(lam / 2, abs=1e-12)
    assert ni.burst == pytest.approx(math.exp(-1), abs=1e-12)
    d = 2 ** -0.5
    o = 1.0 / (1.0 + math.exp(-1))  # lam - 1 = e^{-1}
    expected = lam + 0.14 * math.exp(-1) * math.tanh(lam / 2) * d * o
    assert ni.damped == pytest.approx(expected, abs=1e-12)


def test_damped_bonus_bounds_fuzz():
    rng = np.random.default_rng(8)
    for _ in range(200):
        n_ev = int(rng.integers(0, 12))
        evs = [
            event(float(rng.uniform(0, 99)), 0, float(rng.uniform(0, 1)))
            for _ in range(n_ev)
        ]
        cfg = IntensityConfig(
            half_life=float(rng.uniform(0.5, 50)),
            excitation_decay=float(rng.uniform(0.5, 20)),
        )
        ni = damped_intensity(0, 100.0, evs, cfg=cfg)
        assert ni.damped >= ni.base - 1e-15
        assert ni.damped - ni.base <= 0.14 + 1e-15


# serialization --------------------------------------------------------------

def test_event_jsonl_round_trip():
    evs = [
        event(1.5, 3, 0.85, category="attack"),
        event(2.0, 4, 0.5, route_tag="r1"),
    ]
    assert events_from_jsonl(events_to_jsonl(evs)) == evs
