import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from pnet.design import design_schedule
from pnet.errors import ValidationError
from pnet.estimation import (
    RPE_OVERHEAD,
    RpeSchedule,
    estimate_function_phase,
    parity_oracle,
    parity_outcome_prob,
    rpe_estimate,
    rpe_estimate_batch,
    scaling_fit,
    single_phase_mse,
    wrap,
)


def test_parity_examples():
    assert parity_outcome_prob(0, 0) == pytest.approx(1.0)
    assert parity_outcome_prob(math.pi, 0) == pytest.approx(0.0)
    assert parity_outcome_prob(math.pi / 2, math.pi / 2) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_parity_in_unit_interval(phi, delta):
    assert 0.0 <= parity_outcome_prob(phi, delta) <= 1.0


def test_oracle_frequency_matches_model():
    rng = np.random.default_rng(0)
    n = 40_000
    for phi, delta in [(0.3, 0.0), (1.1, math.pi / 2), (2.5, 0.0)]:
        freq = float(np.mean(parity_oracle(phi)(1, delta, rng, n) == 1))
        assert abs(freq - parity_outcome_prob(phi, delta)) < 5 / math.sqrt(n)


def test_schedule_validation():
    with pytest.raises(ValidationError, match="invalid RPE schedule"):
        RpeSchedule((1, 3), (2, 2))
    with pytest.raises(ValidationError, match="invalid RPE schedule"):
        RpeSchedule((1, 2), (2, 3))
    s = RpeSchedule.default(4)
    assert s.N == (1, 2, 4, 8) and s.total == sum(n * v for n, v in zip(s.N, s.nu))
    assert list(s.nu) == sorted(s.nu, reverse=True)


@pytest.mark.parametrize("budget", [16, 40, 64, 100, 512, 4096])
def test_for_budget_uses_whole_budget(budget):
    s = RpeSchedule.for_budget(budget)
    assert s.total == budget
    deeper = RpeSchedule.default(s.K + 1)
    assert deeper.total > budget


def test_rpe_zero_phase():
    rng = np.random.default_rng(1)
    est = [rpe_estimate(parity_oracle(0.0), RpeSchedule.for_budget(64), rng) for _ in range(50)]
    # one shot per quadrature at the last stage quantizes the answer to pi/16
    assert np.max(np.abs(wrap(np.array(est)))) <= math.pi / 16 + 1e-12


def test_sequential_and_batched_agree_statistically():
    phi = 1.234
    sched = RpeSchedule.for_budget(128)
    rng = np.random.default_rng(2)
    seq = np.array([rpe_estimate(parity_oracle(phi), sched, rng) for _ in range(10_000)])
    bat = rpe_estimate_batch(phi, sched, 10_000, rng)
    e1, e2 = np.abs(wrap(seq - phi)), np.abs(wrap(bat - phi))
    assert np.median(e1) == pytest.approx(np.median(e2), rel=0.1)
    assert np.mean(e1**2) == pytest.approx(np.mean(e2**2), rel=0.3)


def test_rpe_meets_documented_overhead():
    phi = 1.234
    err2 = wrap(rpe_estimate_batch(phi, RpeSchedule.default(5), 1000, np.random.default_rng(3)) - phi) ** 2
    assert err2.mean() <= RPE_OVERHEAD / RpeSchedule.default(5).total ** 2


def test_failure_probability_shrinks_with_depth():
    rng = np.random.default_rng(4)
    rates = []
    for K in (2, 4, 6):
        sched = RpeSchedule.default(K)
        err = np.abs(wrap(rpe_estimate_batch(0.77, sched, 2000, rng) - 0.77))
        rates.append(float(np.mean(err > math.pi / 2**K)))
    assert all(r < 0.25 for r in rates)


def test_asymptotic_heisenberg_slope():
    rng = np.random.default_rng(5)
    pts = [(2**m, single_phase_mse(1.234, 2**m, 4000, rng)[0]) for m in range(9, 15)]
    slope, _, r2 = scaling_fit(pts)
    assert -2.2 <= slope <= -1.8 and r2 > 0.95


def test_function_estimate_unbiased():
    sched = design_schedule(["1", "1"], 4, 2)
    res = estimate_function_phase(sched, [0.05, 0.03], RpeSchedule.for_budget(64), 4000, np.random.default_rng(6))
    sd = math.sqrt(res.mse_empirical / res.trials)
    assert abs(res.q_hat - 0.08) < 3 * sd
    assert not res.out_of_range
    assert res.ratio == pytest.approx(res.mse_empirical / res.bound)


def test_function_estimate_zero_and_flip():
    sched = design_schedule(["-2", "1"], 2, 1)
    res = estimate_function_phase(sched, [0.0, 0.0], RpeSchedule.for_budget(64), 500, np.random.default_rng(7))
    assert abs(res.q_hat) < 0.05 and res.q_true == 0.0
    res = estimate_function_phase(sched, [0.1, 0.05], RpeSchedule.for_budget(256), 2000, np.random.default_rng(8))
    assert res.q_true == pytest.approx(-0.15)
    assert res.q_hat == pytest.approx(-0.15, abs=0.01)


def test_out_of_range_flag():
    sched = design_schedule(["1"], 4, 1)
    res = estimate_function_phase(sched, [1.0], RpeSchedule.for_budget(32), 10, np.random.default_rng(0))
    assert res.out_of_range


def test_no_run_beats_the_bound():
    rng = np.random.default_rng(9)
    sched = design_schedule(["2", "-1", "1"], 3, 2)
    for budget in (16, 64, 256):
        res = estimate_function_phase(sched, [0.02, 0.05, -0.01], RpeSchedule.for_budget(budget), 300, rng)
        assert res.mse_empirical >= res.bound
        assert res.mse_empirical <= RPE_OVERHEAD * res.bound


def test_scaling_fit_examples():
    xs = [2.0**k for k in range(3, 10)]
    assert scaling_fit([(x, 1 / x**2) for x in xs])[0] == pytest.approx(-2.0)
    assert scaling_fit([(x, 3 / x) for x in xs])[0] == pytest.approx(-1.0)
    with pytest.raises(ValidationError):
        scaling_fit([(1, 1)])
