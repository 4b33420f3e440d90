import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from pnet.bounds import entangled_displacement_bound, separable_displacement_bound
from pnet.coremath import partition_signs
from pnet.design import check_saturation_quad
from pnet.errors import ValidationError
from pnet.gaussian import (
    DisplacementProtocol,
    GaussianState,
    RunningMoments,
    apply_displacement_encoding,
    distribute,
    estimate_q_displacement,
    gaussian_qfi,
    homodyne_sample,
    mixing_matrix,
    separable_displacement_protocol,
    squeezed_vacuum,
    vacuum,
)


def test_squeezed_vacuum_examples():
    v = squeezed_vacuum(0)
    assert v.var_x()[0] == pytest.approx(0.25) and v.var_p()[0] == pytest.approx(0.25)
    s = squeezed_vacuum(2)
    assert s.var_p()[0] == pytest.approx((math.sqrt(2) + math.sqrt(3)) ** 2 / 4)
    assert s.var_p()[0] + s.var_x()[0] - 0.5 == pytest.approx(2.0, abs=1e-12)
    big = squeezed_vacuum(1e6)
    assert big.var_p()[0] / 1e6 == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValidationError):
        squeezed_vacuum(-1)


def test_state_rejects_unphysical_covariance():
    with pytest.raises(ValidationError, match="uncertainty"):
        GaussianState(np.zeros(2), np.diag([0.1, 0.1]))


def test_distribute_examples():
    s = squeezed_vacuum(5.0)
    one = distribute(s, [1.0])
    assert np.allclose(one.cov, s.cov)
    xi = s.var_p()[0]
    two = distribute(s, np.array([1.0, 1.0]) / math.sqrt(2))
    _, cp = two.p_block()
    assert cp[0, 0] == pytest.approx((xi + 0.25) / 2)
    assert cp[1, 1] == pytest.approx((xi + 0.25) / 2)
    assert cp[0, 1] == pytest.approx((xi - 0.25) / 2)
    with pytest.raises(ValidationError):
        distribute(s, [1.0, 1.0])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6).filter(lambda v: np.linalg.norm(v) > 1e-3), st.floats(0, 500))
def test_distribute_preserves_photons_and_uncertainty(v, nbar):
    w = np.array(v) / np.linalg.norm(v)
    T = mixing_matrix(w)
    assert np.allclose(T @ T.T, np.eye(w.size), atol=1e-12) and np.allclose(T[:, 0], w)
    st_ = distribute(squeezed_vacuum(nbar), w)
    total = float(np.sum(st_.var_x() + st_.var_p())) - w.size / 2
    assert total == pytest.approx(nbar, abs=1e-10 * max(1.0, nbar))
    assert np.all(st_.uncertainty_products() >= 1 / 16 - 1e-12)


def test_encoding_examples():
    v = vacuum()
    assert np.allclose(apply_displacement_encoding(v, [0.0]).mean, 0)
    assert apply_displacement_encoding(v, [1.0]).mean[0] == pytest.approx(-0.5)
    assert apply_displacement_encoding(v, [0.2], M=3).mean[0] == pytest.approx(-0.3)
    assert np.allclose(apply_displacement_encoding(squeezed_vacuum(3), [0.7]).cov, squeezed_vacuum(3).cov)


def test_homodyne_statistics():
    rng = np.random.default_rng(11)
    x = homodyne_sample(vacuum(), "x", rng, 100_000)[:, 0]
    assert abs(x.mean()) < 0.005
    assert x.var() == pytest.approx(0.25, rel=0.02)
    shifted = apply_displacement_encoding(vacuum(), [1.0])
    y = homodyne_sample(shifted, "x", rng, 100_000)[:, 0]
    assert y.mean() == pytest.approx(-0.5, abs=0.005)
    a = homodyne_sample(shifted, "x", np.random.default_rng(3), 5)
    b = homodyne_sample(shifted, "x", np.random.default_rng(3), 5)
    assert np.array_equal(a, b)


def test_running_moments_merge_is_exact():
    rng = np.random.default_rng(0)
    v = rng.normal(size=1000)
    parts = [RunningMoments.of(c) for c in np.array_split(v, 7)]
    merged = RunningMoments()
    for p in parts:
        merged = merged.merge(p)
    assert merged.mean == pytest.approx(v.mean())
    assert merged.variance == pytest.approx(v.var(ddof=1))


def test_estimator_examples():
    p1 = DisplacementProtocol(["1"], 100.0, 1)
    e = estimate_q_displacement(p1, [0.0], 10**5, seed=1)
    assert abs(e.q_hat) < 3 * e.q_stderr + 1e-12
    assert 0.97 <= e.mse / p1.bound(exact=True) <= 1.03
    p2 = DisplacementProtocol(["1", "1"], 100.0, 1)
    e2 = estimate_q_displacement(p2, [0.3, -0.1], 10**5, seed=2)
    assert e2.mse == pytest.approx(entangled_displacement_bound(["1", "1"], 100.0), rel=0.05)
    with pytest.raises(ValidationError):
        estimate_q_displacement(p1, [0.0], 1)


@pytest.mark.parametrize("alpha", [["1", "-2"], ["-3", "1", "1/2"], ["2", "0", "1"]])
def test_estimator_is_unbiased(alpha):
    p = DisplacementProtocol(alpha, 20.0, 2)
    theta = np.linspace(-0.4, 0.7, len(alpha))
    e = estimate_q_displacement(p, theta, 50_000, seed=5)
    q = float(np.dot([float(Fraction(a)) for a in alpha], theta))
    assert e.q_true == pytest.approx(q)
    assert abs(e.q_hat - q) < 3 * e.q_stderr


def test_initial_displacement_does_not_change_mse():
    base = DisplacementProtocol(["1", "2"], 30.0, 1)
    shifted = DisplacementProtocol(["1", "2"], 30.0, 1, initial_displacement=(0.4, -1.0, 2.0, 0.3))
    a = estimate_q_displacement(base, [0.1, 0.2], 20_000, seed=9)
    b = estimate_q_displacement(shifted, [0.1, 0.2], 20_000, seed=9)
    assert b.mse == pytest.approx(a.mse, rel=1e-9)


def test_qfi_examples():
    for M in (1, 3):
        F = gaussian_qfi(DisplacementProtocol(["1"], 7.0, M)).entries
        assert F[0, 0] == pytest.approx(M**2 * (math.sqrt(7) + math.sqrt(8)) ** 2)
    p = DisplacementProtocol(["1", "1"], 7.0, 2)
    xi = squeezed_vacuum(7.0).var_p()[0]
    assert gaussian_qfi(p).entries[0, 1] == pytest.approx(4 * 4 * (xi - 0.25) / 2)
    vac = gaussian_qfi(DisplacementProtocol(["1", "1"], 0.0, 2)).entries
    assert vac == pytest.approx(4 * np.eye(2))


def test_qfi_quadrature_saturation():
    a = partition_signs(["1", "1"])
    F = gaussian_qfi(DisplacementProtocol(a, 100.0, 1))
    assert check_saturation_quad(F, a, 100.0, 1) <= 3 / 100
    residuals = [check_saturation_quad(gaussian_qfi(DisplacementProtocol(a, n, 1)), a, n, 1) for n in (10, 100, 1000)]
    assert residuals[0] > residuals[1] > residuals[2]
    assert check_saturation_quad(gaussian_qfi(DisplacementProtocol(a, 0.0, 1)), a, 0.0, 1) == pytest.approx(1.0)


def test_separable_protocol():
    s = separable_displacement_protocol(["1"], 40.0, 1, 50_000, seed=1)
    e = estimate_q_displacement(DisplacementProtocol(["1"], 40.0, 1), [0.0], 50_000, seed=1)
    assert s.mse == pytest.approx(e.mse, rel=0.05)
    s2 = separable_displacement_protocol(["1", "1"], 100.0, 1, 10**5, seed=4)
    assert s2.mse == pytest.approx(separable_displacement_bound(["1", "1"], 100.0), rel=0.05)
    e2 = estimate_q_displacement(DisplacementProtocol(["1", "1"], 100.0, 1), [0.0, 0.0], 10**5, seed=5)
    assert e2.mse / s2.mse == pytest.approx(0.5, rel=0.05)
