import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from scipy.optimize import linprog

from pnet.bounds import (
    BoundReport,
    bound_report,
    entangled_displacement_bound,
    entangled_phase_bound,
    min_entanglement,
    reports_to_csv,
    separable_displacement_bound,
    separable_phase_bound,
    separable_photon_allocation,
    solve_beta_star_phase,
)
from pnet.coremath import partition_signs

from conftest import alphas


def lp_seminorm_min(alpha, N):
    """min N (u - l) s.t. l <= beta_j <= u, l <= 0 <= u, alpha . beta = 1.

    Independent of the closed form: it optimizes over every beta, not just
    the two boundary candidates.  Variables are (beta_1..beta_d, u, l).
    """
    a = np.array([float(x) for x in alpha], dtype=float)
    d = a.size
    c = np.zeros(d + 2)
    c[d], c[d + 1] = N, -N
    A_ub, b_ub = [], []
    for j in range(d):
        row = np.zeros(d + 2)
        row[j], row[d] = 1, -1
        A_ub.append(row)
        b_ub.append(0)
        row = np.zeros(d + 2)
        row[j], row[d + 1] = -1, 1
        A_ub.append(row)
        b_ub.append(0)
    A_eq = [np.concatenate([a, [0, 0]])]
    bounds = [(None, None)] * d + [(0, None), (None, 0)]
    res = linprog(c, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=[1], bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


@pytest.mark.parametrize(
    "alpha, N, t, expected",
    [(["1/2", "1/2"], 10, 1, 0.01), (["1", "-1"], 2, 1, 0.25), (["2", "-1"], 4, 2, 0.0625)],
)
def test_entangled_phase_examples(alpha, N, t, expected):
    assert entangled_phase_bound(alpha, N, t) == pytest.approx(expected, rel=1e-12)


def test_entangled_phase_exact_fraction():
    assert entangled_phase_bound(["2", "-1"], 4, 2, as_fraction=True) == Fraction(1, 16)


@pytest.mark.parametrize(
    "alpha, N, expected",
    [(["1", "0"], 5, 0.04), (["1", "1"], 2, 2.0), (["1/4"] * 4, 10, 0.04)],
)
def test_separable_phase_examples(alpha, N, expected):
    assert separable_phase_bound(alpha, N) == pytest.approx(expected, rel=1e-12)


def test_flat_phase_ratio_is_d():
    a = ["1/4"] * 4
    assert separable_phase_bound(a, 10) / entangled_phase_bound(a, 10) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("nbar", [0.5, 3.0, 100.0])
def test_displacement_exact_single_mode(nbar):
    expected = 1 / (math.sqrt(nbar) + math.sqrt(nbar + 1)) ** 2
    assert entangled_displacement_bound(["1"], nbar, exact=True) == pytest.approx(expected, rel=1e-12)


def test_displacement_examples():
    assert entangled_displacement_bound(["1"], 0, exact=True) == pytest.approx(1.0)
    assert entangled_displacement_bound(["3", "4"], 100) == pytest.approx(0.0625)
    assert separable_displacement_bound(["1"], 25) == pytest.approx(0.01)
    assert separable_displacement_bound(["1", "1"], 50) == pytest.approx(0.02)
    half = ["1/2", "1/2"]
    assert separable_displacement_bound(half, 7) / entangled_displacement_bound(half, 7) == pytest.approx(2.0)


def test_exact_displacement_below_leading():
    for nbar in (1, 10, 1000):
        assert entangled_displacement_bound(["1", "2"], nbar, exact=True) < entangled_displacement_bound(["1", "2"], nbar)


@pytest.mark.parametrize(
    "alpha, beta, objective",
    [
        (["1", "1"], (Fraction(1, 2), Fraction(1, 2)), Fraction(1, 2)),
        (["1", "-1"], (Fraction(1), Fraction(0)), Fraction(1)),
        (["2", "-1"], (Fraction(1, 2), Fraction(0)), Fraction(1, 2)),
    ],
)
def test_beta_star_examples(alpha, beta, objective):
    N = 6
    dv = solve_beta_star_phase(alpha, N)
    assert dv.entries == beta
    assert dv.objective == objective * N
    assert dv.objective == pytest.approx(lp_seminorm_min(partition_signs(alpha).entries, N), rel=1e-12)


@given(alphas(max_size=8))
def test_beta_star_matches_lp(raw):
    a = partition_signs(raw)
    N = 3
    dv = solve_beta_star_phase(a, N)
    assert sum(x * y for x, y in zip(a.entries, dv.entries)) == 1
    assert all(x * y >= 0 for x, y in zip(a.entries, dv.entries))
    assert float(dv.objective) == pytest.approx(lp_seminorm_min(a.entries, N), rel=1e-9, abs=1e-12)
    # the bound is the inverse square of the optimal seminorm per unit time
    t = 2
    assert entangled_phase_bound(a, N, t) == pytest.approx(1.0 / (t * float(dv.objective)) ** 2, rel=1e-12)


@given(alphas(max_size=8))
def test_entangled_never_above_separable(raw):
    assert entangled_phase_bound(raw, 7) <= separable_phase_bound(raw, 7) * (1 + 1e-12)
    assert entangled_displacement_bound(raw, 7.5) <= separable_displacement_bound(raw, 7.5) * (1 + 1e-12)


def test_allocations():
    assert separable_photon_allocation(["1", "1"], 10, "phase").rounded == (5, 5)
    assert separable_photon_allocation(["8", "1"], 9, "displacement").weights == pytest.approx((8, 1))
    alloc = separable_photon_allocation(["8", "1"], 5, "phase")
    assert alloc.weights == pytest.approx((4, 1))
    assert alloc.rounded == (4, 1) and not alloc.flagged
    zero = separable_photon_allocation(["1", "0", "2"], 6, "displacement")
    assert zero.weights[1] == 0


def test_allocation_reproduces_separable_bound():
    a = ["3", "-1", "1/2"]
    alloc = separable_photon_allocation(a, 1, "phase")
    assert alloc.mse_weights == pytest.approx(separable_phase_bound(a, 1), rel=1e-12)
    disp = separable_photon_allocation(a, 5.0, "displacement")
    assert disp.mse_weights == pytest.approx(separable_displacement_bound(a, 5.0), rel=1e-12)


def test_rounding_flag():
    alloc = separable_photon_allocation(["1", "1", "1"], 4, "phase")
    assert alloc.flagged and alloc.mse_rounded > alloc.mse_weights


def test_min_entanglement():
    a = ["1", "2", "-1", "1/2"]
    assert min_entanglement(a, 2, "phase", "discrete") == 3
    assert min_entanglement(a, 2, "displacement", "discrete") == 2
    assert min_entanglement(a, 2, "phase", "arbitrary") == 2
    assert min_entanglement(a, 2, "displacement", "arbitrary") == 1
    # enough passes recovers the arbitrary-control values
    assert min_entanglement(a, 100, "phase", "discrete") == 2
    assert min_entanglement(a, 100, "displacement", "discrete") == 1


def test_bound_report_examples():
    (rep,) = bound_report(["1/2", "1/2"], N=10, t=1)
    assert (rep.entangled_mse, rep.separable_mse, rep.ratio) == pytest.approx((0.01, 0.02, 2.0))
    assert bound_report(["1"], N=3)[0].ratio == pytest.approx(1.0)
    assert bound_report(["1"], nbar=3.0)[0].ratio == pytest.approx(1.0)
    assert bound_report(["1", "-1"], N=2, t=1)[0].entangled_mse == pytest.approx(0.25)


def test_bound_report_round_trip_and_csv():
    reps = bound_report(["1", "-2", "1/3"], N=4, nbar=2.5, M=3)
    assert [r.coupling for r in reps] == ["phase", "displacement"]
    assert reps[0].resources["t"] == 3.0
    for r in reps:
        assert BoundReport.from_dict(r.to_dict()) == r
    text = reports_to_csv(["1", "-2", "1/3"], reps)
    assert len(text.strip().splitlines()) == 3
