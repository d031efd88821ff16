import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from humbert.errors import DomainError
from humbert.euler_reps import (
    addition_theorem_check,
    beta_decoupling_check,
    convolution_kernel,
    corollary2_check,
    epsilon_spread,
    eval_euler,
    eval_integrated_by_w,
    eval_kdf_euler,
    eval_semi_infinite,
)
from humbert.quadrature import QuadratureConfig
from humbert.series_core import eval_kdf_series, eval_series, golden_lookup
from humbert.types import EvalPoint, FAMILY_FIELDS, Family, KdFSpec, ParamSet


def at(X, Y, t=1.0):
    return EvalPoint(-X / t, -Y / t, t)


def test_convolution_at_origin_is_one():
    p = ParamSet.make("Phi2", beta=0.7, beta_p=1.4, gamma=2.3)
    assert eval_euler(p, EvalPoint(0, 0)).value == pytest.approx(1.0, rel=1e-13)


def test_phi2_matches_golden_series():
    rec = golden_lookup("Phi2", {"beta": 1, "beta_p": 1, "gamma": 2}, -0.5, -0.25)
    v = eval_euler(ParamSet.make("Phi2", beta=1, beta_p=1, gamma=2), EvalPoint(-0.5, -0.25), eps=1.0).value
    assert v == pytest.approx(rec["value"], rel=1e-9)


def test_xi2_beyond_series_disk_matches_laplace():
    from humbert.laplace_bridge import eval_ilt

    p = ParamSet.make("Xi2", alpha=1, beta=1, gamma=2)
    pt = EvalPoint(2.0, 1.0)
    assert eval_euler(p, pt).value == pytest.approx(eval_ilt(p, pt).value, rel=1e-6)


def test_branch_cut_is_rejected():
    p = ParamSet.make("Xi2", alpha=1, beta=1, gamma=2)
    with pytest.raises(DomainError):
        eval_euler(p, EvalPoint(-1.5, 0.2))


def test_kernel_needs_eps_inside():
    p = ParamSet.make("Phi2", beta=1, beta_p=1, gamma=2)
    with pytest.raises(DomainError):
        convolution_kernel(p, 0.1, 0.1, eps=2.5)


@pytest.mark.parametrize("scheme", ["double_exponential", "gauss_jacobi"])
def test_schemes_agree(scheme):
    p = ParamSet.make("Phi3", beta=0.8, gamma=1.7)
    pt = EvalPoint(0.6, -0.9, 1.5)
    v = eval_euler(p, pt, q=QuadratureConfig(scheme=scheme)).value
    assert v == pytest.approx(eval_series(p, pt).value, rel=1e-10)


@st.composite
def inside_case(draw):
    fam = Family.parse(draw(st.sampled_from(["Phi2", "Phi3", "Xi1", "Xi2", "F3"])))
    params = ParamSet.make(fam, **{k: draw(st.floats(0.4, 2.5)) for k in FAMILY_FIELDS[fam]})
    X = draw(st.floats(-0.8, 0.8))
    Y = draw(st.floats(-0.8, 0.8) if fam is Family.F3 else st.floats(-3, 3))
    return params, EvalPoint.from_args(X, Y)


@given(inside_case())
def test_continuation_consistent_with_series(case):
    params, pt = case
    s, e = eval_series(params, pt), eval_euler(params, pt)
    assert abs(s.value - e.value) <= 10 * (s.abs_err + e.abs_err) + 1e-10 * abs(s.value)


@given(inside_case())
def test_epsilon_independence(case):
    params, pt = case
    # spread over eps = gamma/4, gamma/2, 3 gamma/4, relative to the largest value
    _, spread = epsilon_spread(params, pt)
    assert spread <= 3 * 1e-12 + 1e-13


def test_semi_infinite_trivial_and_cross_route():
    psi2 = ParamSet.make("Psi2", alpha=1.3, gamma=1.5, gamma_p=2.5)
    assert eval_semi_infinite(psi2, EvalPoint(0, 0)).value == pytest.approx(1.0, rel=1e-13)
    f2 = ParamSet.make("F2", alpha=1, beta=1, beta_p=1, gamma=2, gamma_p=2)
    pt = EvalPoint.from_args(0.3, 0.2)
    assert eval_semi_infinite(f2, pt).value == pytest.approx(eval_series(f2, pt).value, rel=1e-9)
    psi1 = ParamSet.make("Psi1", alpha=1, beta=1, gamma=2, gamma_p=2)
    pt = EvalPoint.from_args(0.4, -1.0)
    assert eval_semi_infinite(psi1, pt).value == pytest.approx(eval_series(psi1, pt).value, rel=1e-9)


def test_semi_infinite_decay_condition():
    f2 = ParamSet.make("F2", alpha=1, beta=1, beta_p=1, gamma=2, gamma_p=2)
    with pytest.raises(DomainError):
        eval_semi_infinite(f2, EvalPoint.from_args(1.2, 0.1))


def test_w_integrals_match_series():
    p3 = ParamSet.make("Phi3i", beta=0.6, gamma=1.4, lam=1)
    assert eval_integrated_by_w(p3, EvalPoint(0, 0)).value == pytest.approx(1.0, rel=1e-14)
    p3 = ParamSet.make("Phi3i", beta=1, gamma=1.5, lam=1)
    pt = EvalPoint.from_args(-2, -1)
    assert eval_integrated_by_w(p3, pt).value == pytest.approx(eval_series(p3, pt).value, rel=1e-8)
    p2 = ParamSet.make("Phi2i", beta=1, beta_p=1, gamma=2, lam=1)
    pt = EvalPoint.from_args(-1, -0.5)
    assert eval_integrated_by_w(p2, pt).value == pytest.approx(eval_series(p2, pt).value, rel=1e-8)


def test_w_integral_general_lambda():
    p = ParamSet.make("Phi3i", beta=1, gamma=1.5, lam=2.5)
    pt = EvalPoint(0.7, -0.4)
    assert eval_integrated_by_w(p, pt).value == pytest.approx(eval_series(p, pt).value, rel=1e-10)
    with pytest.raises(DomainError):
        eval_integrated_by_w(p.with_(lam=-0.5), pt)


def test_corollary2():
    assert corollary2_check(1, 1, 2, 1, 1, 1) < 1e-8
    assert corollary2_check(0.5, 1.5, 2.5, 2, 0.5, 3) < 1e-7
    assert corollary2_check(0.7, 0.9, 1.8, 1.5, 2.0, 1e-6) < 1e-10


@given(st.integers(0, 8), st.integers(0, 8), st.floats(0.5, 5))
def test_beta_decoupling(m, n, g):
    assert beta_decoupling_check(m, n, g, g / 2) < 1e-10


@given(st.sampled_from([1.5, 2.0, 3.7]), st.floats(0, 2), st.floats(0, 2))
def test_addition_theorem(g, x, y):
    assert addition_theorem_check(g, x, y) < 1e-9


def test_kdf_euler_matches_kdf_series():
    spec = KdFSpec(2.5, upper_x=(1.2,), upper_y=(0.7,), lower_x=(1.5,))
    pt = EvalPoint.from_args(0.4, -0.6)
    assert eval_kdf_euler(spec, pt).value == pytest.approx(eval_kdf_series(spec, pt).value, rel=1e-9)
