import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holopart.engine import PathConfig, PathEnsemble
from holopart.summing import (
    FiniteOperator,
    balancing_lambda,
    certificate_partitions,
    certificate_violations,
    delta_scaling,
    error_profile,
    iterate_split,
    operator_norm,
    peak_coeffs,
    pietsch_constant,
    pietsch_fit,
    split_operator,
    summing_lower_bound,
)

N = 4096
Y = np.array([1.0, 2.0j])


@pytest.fixture(scope="module")
def op():
    return FiniteOperator.random(4, 2, seed=3)


@pytest.fixture(scope="module")
def cert(op):
    return pietsch_fit(op)


@pytest.fixture(scope="module")
def ens():
    return PathEnsemble(PathConfig(seed=41), 4000)


@pytest.fixture(scope="module")
def split(op, cert, ens):
    p = certificate_partitions(cert, [0.25], ens)[0]
    return p, split_operator(op, cert, 4.0, 0.25, ens, witnesses=6, partition=p, bins=32)


# -- operators -------------------------------------------------------------------


def test_operator_validation():
    with pytest.raises(ValueError):
        FiniteOperator(np.array([1, 1]), np.ones((1, 2)))
    with pytest.raises(ValueError):
        FiniteOperator(np.array([0, 1]), np.ones((1, 3)))
    with pytest.raises(ValueError):
        FiniteOperator.random(65, 2)


def test_operator_text_round_trip(op, tmp_path):
    back = FiniteOperator.from_text(op.to_text())
    assert np.array_equal(back.indices, op.indices) and np.array_equal(back.matrix, op.matrix)
    op.save(tmp_path / "S.txt")
    assert np.array_equal(FiniteOperator.load(tmp_path / "S.txt").matrix, op.matrix)


def test_operator_norm_rank_one():
    S = FiniteOperator.rank_one(100, Y)
    assert operator_norm(S) == pytest.approx(np.linalg.norm(Y), rel=1e-12)


def test_operator_norm_diagonal():
    # max over |c_i| <= 1 of ||diag(a) c|| is ||a||
    S = FiniteOperator(np.array([0, 7, 50]), np.diag([1.0, 2.0, 2.0]))
    assert operator_norm(S) == pytest.approx(3.0, rel=1e-9)


def test_peak_polynomial():
    c = peak_coeffs(1.3, 16)
    th = np.linspace(0, 2 * np.pi, 1001)
    vals = np.polynomial.polynomial.polyval(np.exp(1j * th), c)
    assert abs(np.polynomial.polynomial.polyval(np.exp(1.3j), c)) == pytest.approx(1.0)
    assert np.abs(vals).max() <= 1 + 1e-12


# -- Pietsch certificates ---------------------------------------------------------------


def test_certificate_constant_is_exact_for_its_density(op, cert):
    assert pietsch_constant(op, cert.density) == pytest.approx(cert.pi2_upper, rel=1e-9)
    assert cert.converged
    assert cert.pi2_upper >= cert.solver_value * (1 - 1e-4)


def test_rank_one_pietsch_constant_is_norm_of_y():
    S = FiniteOperator.rank_one(1000, Y)
    c = pietsch_fit(S)
    assert c.pi2_upper == pytest.approx(np.linalg.norm(Y), rel=0.01)


def test_single_point_identity():
    S = FiniteOperator.rank_one(0, [1.0])
    assert pietsch_fit(S).pi2_upper == pytest.approx(1.0, rel=0.01)


@settings(max_examples=15)
@given(st.lists(st.floats(0.05, 5.0), min_size=3, max_size=3))
def test_certificate_beats_symmetric_densities(op, cert, params):
    """No density from a three-parameter family does better than the fitted one."""
    a, b, c = params
    th = np.arange(N) * 2 * np.pi / N
    f = a + b * (1 + np.cos(th - op.points[0])) ** 4 + c * (1 + np.cos(th - op.points[-1])) ** 4
    assert pietsch_constant(op, f) >= cert.pi2_upper * (1 - 1e-3)


def test_four_point_symmetric_brute_force():
    """Identity on four symmetric points: a grid search over symmetric densities agrees with the fit."""
    idx = np.arange(4) * N // 4
    S = FiniteOperator(idx, np.eye(4) / 2)
    c = pietsch_fit(S)
    th = np.arange(N) * 2 * np.pi / N
    best = np.inf
    for s in np.linspace(0.5, 60, 40):
        f = np.exp(s * np.cos(4 * th))  # symmetric, peaked at the points
        best = min(best, pietsch_constant(S, f))
    assert c.pi2_upper <= best * (1 + 1e-3)
    assert c.pi2_upper >= 0.5 * best


@pytest.mark.parametrize("scale", [0.1, 10.0])
def test_certificate_homogeneity(op, cert, scale):
    assert pietsch_fit(op.scaled(scale)).pi2_upper == pytest.approx(scale * cert.pi2_upper, rel=1e-4)


def test_held_out_violations(op, cert):
    bad, worst = certificate_violations(op, cert, count=2000)
    assert bad == 0 and worst <= 1 + 1e-9


def test_zero_operator_rejected():
    with pytest.raises(ValueError):
        pietsch_fit(FiniteOperator(np.array([3]), np.zeros((1, 1))))


# -- lower bounds ---------------------------------------------------------------------


def test_lower_bound_of_zero_operator():
    assert summing_lower_bound(FiniteOperator(np.array([3]), np.zeros((1, 1))), 4.0).value == 0.0


def test_lower_bound_rank_one():
    S = FiniteOperator.rank_one(500, Y)
    lb = summing_lower_bound(S, 4.0, budget=10)
    assert lb.value == pytest.approx(np.linalg.norm(Y), rel=0.1)
    assert lb.value <= np.linalg.norm(Y) * (1 + 1e-9)


def test_lower_bound_sandwich(op, cert):
    lb = summing_lower_bound(op, 4.0, budget=20)
    assert 0 < lb.value <= lb.evaluate(op, 2.0) * (1 + 1e-9)
    assert lb.evaluate(op, 2.0) <= cert.pi2_upper * (1 + 1e-6)
    with pytest.raises(ValueError):
        summing_lower_bound(op, 0.5)


# -- splitting ------------------------------------------------------------------------


def test_balancing_lambda_balances():
    lam = balancing_lambda(2.0, 3.0, 4.0)
    assert 2.0 * lam == pytest.approx(3.0 * lam ** (1 - 2.0), rel=1e-12)


def test_split_report(split, op, cert):
    _, rep = split
    assert rep.balance_error <= 0.01
    assert rep.gluing_error <= 1e-9
    assert rep.op_norm == pytest.approx(operator_norm(op))
    assert np.all(np.isfinite(rep.certified_ratio)) and np.all(rep.certified_ratio > 0)
    assert rep.target == pytest.approx(rep.op_norm ** 0.5 * cert.pi2_upper ** 0.5)


def test_error_profile_matches_split(split, op, cert, ens):
    p, rep = split
    prof = error_profile(op, cert, 4.0, 0.25, ens, witnesses=6, partition=p, bins=32)
    assert np.allclose(prof.error_norm, rep.error_norm, rtol=1e-12, atol=1e-15)
    assert np.allclose(prof.error_norm_raw, rep.error_norm_raw, rtol=1e-12, atol=1e-15)
    s = delta_scaling(rep, prof)
    assert s["measured"] == pytest.approx(1.0) and s["expected"] == pytest.approx(1.0)


def test_delta_scaling_rejects_mismatched_draws(split, op, cert, ens):
    p, rep = split
    prof = error_profile(op, cert, 4.0, 0.25, ens, witnesses=3, partition=p, bins=32)
    with pytest.raises(ValueError):
        delta_scaling(rep, prof)


def test_split_rejects_bad_parameters(op, cert, ens):
    with pytest.raises(ValueError):
        split_operator(op, cert, 2.0, 0.25, ens)
    with pytest.raises(ValueError):
        split_operator(op, cert, 4.0, 1.5, ens)


def test_single_round_iterate_reuses_split(split, op, cert, ens):
    _, rep = split
    lb = summing_lower_bound(op, 4.0, budget=5)
    est = iterate_split(op, 4.0, 0.25, ens, rounds=1, witnesses=6, first=(cert, rep), lower=lb)
    tail = est.rounds[-1]["pi2_upper"]
    assert est.certified_bound == pytest.approx(rep.certified_ratio.max() * rep.target + tail)
    assert est.lower_bound == lb.value
    assert est.sandwich_ok
    with pytest.raises(ValueError):
        iterate_split(op, 4.0, 0.25, ens, rounds=0)
