import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humbert.errors import ContourError, DomainError, SingularPoint
from humbert.euler_reps import eval_euler
from humbert.laplace_bridge import (
    ILTConfig,
    LaplaceImage,
    eval_ilt,
    eval_kdf_ilt,
    image_eval,
    invert,
    laplace_pair_check,
    tauberian_slope,
)
from humbert.series_core import eval_kdf_series, eval_series
from humbert.types import EvalPoint, KdFSpec, Method, ParamSet


def P(fam, **kw):
    return ParamSet.make(fam, **kw)


def test_image_table_values():
    img = LaplaceImage("Phi2", P("Phi2", beta=1, beta_p=1, gamma=2), 0, 0)
    assert image_eval(img, 1) == pytest.approx(1.0)
    img = LaplaceImage("Phi3", P("Phi3", beta=1, gamma=2), 1, 4)
    assert image_eval(img, 2).real == pytest.approx(math.exp(-2) / 6, rel=1e-15)
    img = LaplaceImage("Phi2is", P("Phi2i", beta=1, beta_p=1, gamma=2, lam=1), 1, 1)
    assert image_eval(img, 1).real == pytest.approx(0.5, rel=1e-15)


def test_image_singular_point():
    img = LaplaceImage("Phi2", P("Phi2", beta=1, beta_p=1, gamma=2), 0.5, 0.25)
    with pytest.raises(SingularPoint):
        img(-0.5)
    assert img.rightmost() == 0.0


def test_principal_branch_off_axis():
    b, bp, g, x, y = 0.3, 1.7, 2.2, 0.4, -0.6
    img = LaplaceImage("Phi2", P("Phi2", beta=b, beta_p=bp, gamma=g), x, y)
    p = mp.mpc(-0.2, 0.9)
    ref = mp.exp((b + bp - g) * mp.log(p) - b * mp.log(p + x) - bp * mp.log(p + y))
    assert complex(img(p)) == pytest.approx(complex(ref), rel=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        ILTConfig(nodes=4)
    with pytest.raises(ValueError):
        ILTConfig(shift=math.inf)
    with pytest.raises(ValueError):
        ILTConfig(method="nope")


@pytest.mark.parametrize("method", ["fixed_contour", "summation_accel"])
@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_elementary_pairs(method, t):
    assert invert(lambda p: 1 / p, t, ILTConfig(method)).value == pytest.approx(1.0, abs=1e-8)


def test_power_pair():
    r = invert(lambda p: p ** mp.mpf(-1.5), 2.0)
    assert r.value == pytest.approx(2**0.5 / math.gamma(1.5), rel=1e-10)
    assert r.method is Method.ILT


def test_contour_left_of_singularity():
    img = LaplaceImage("Phi2", P("Phi2", beta=1, beta_p=1, gamma=2), -2.0, 0.5)
    with pytest.raises(ContourError):
        invert(img, 1.0, ILTConfig(shift=0.5))


def test_phi2_against_series():
    p = P("Phi2", beta=1, beta_p=1, gamma=2)
    pt = EvalPoint(-0.5, -0.25)
    assert eval_ilt(p, pt).value == pytest.approx(eval_series(p, pt).value, rel=1e-6)
    assert eval_ilt(p, pt, ILTConfig("summation_accel")).value == pytest.approx(eval_series(p, pt).value, rel=1e-6)


def test_phi3_origin():
    assert eval_ilt(P("Phi3", beta=1, gamma=2), EvalPoint(0, 0)).value == pytest.approx(1.0, rel=1e-10)


def test_xi2_beyond_disk_against_euler():
    p = P("Xi2", alpha=1, beta=1, gamma=2)
    pt = EvalPoint(2.0, 1.0)
    assert eval_ilt(p, pt).value == pytest.approx(eval_euler(p, pt).value, rel=1e-6)


def test_xi_cut_refused():
    with pytest.raises(DomainError):
        eval_ilt(P("Xi2", alpha=1, beta=1, gamma=2), EvalPoint(-0.5, 1.0))
    with pytest.raises(DomainError):
        eval_ilt(P("Xi2", alpha=1, beta=1, gamma=2), EvalPoint(1e-4, 1.0))


def test_integrated_phi2_against_series():
    p = P("Phi2i", beta=1, beta_p=1, gamma=2, lam=1)
    pt = EvalPoint(-1, -0.5)
    assert eval_ilt(p, pt).value == pytest.approx(eval_series(p, pt).value, rel=1e-6)


def test_integrated_phi2_symmetric_and_permuted_flags():
    p = P("Phi2i", beta=0.4, beta_p=0.9, gamma=2.1, lam=1)
    sym = eval_ilt(p, EvalPoint(0.6, 0.6))
    assert "symmetric" in sym.flags
    assert sym.value == pytest.approx(eval_series(p, EvalPoint(0.6, 0.6)).value, rel=1e-8)
    perm = eval_ilt(p, EvalPoint(0.3, 0.8))
    assert "permuted" in perm.flags
    assert perm.value == pytest.approx(eval_series(p, EvalPoint(0.3, 0.8)).value, rel=1e-8)


@pytest.mark.parametrize("variant", ["regularized", "table", "moment"])
def test_phi3i_image_variants(variant):
    p = P("Phi3i", beta=0.7, gamma=1.8, lam=1)
    pt = EvalPoint(0.9, 0.5, 1.3)
    assert eval_ilt(p, pt, variant=variant).value == pytest.approx(eval_series(p, pt).value, rel=1e-8)


@settings(max_examples=15)
@given(
    st.sampled_from(["Phi2", "Phi3", "Phi2i", "Phi3i"]),
    st.floats(0.3, 2), st.floats(0.3, 2), st.floats(1.1, 3),
    st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.5, 3),
)
def test_image_inversion_agrees_with_series(fam, b, bp, g, x, y, t):
    kw = {"beta": b, "gamma": g}
    if fam in ("Phi2", "Phi2i"):
        kw["beta_p"] = bp
    if fam.endswith("i"):
        kw["lam"] = 1.0
    p = P(fam, **kw)
    pt = EvalPoint(x, y, t)
    s = eval_series(p, pt)
    i = eval_ilt(p, pt)
    assert abs(s.value - i.value) <= 1e-7 * max(abs(s.value), 1e-3)


def test_prefactor_consistency_with_euler_at_unit_t():
    cases = [
        P("Xi1", alpha=0.8, beta=1.2, beta_p=0.6, gamma=2.0),
        P("F3", alpha=1.1, alpha_p=0.7, beta=0.9, beta_p=1.3, gamma=2.4),
    ]
    pt = EvalPoint(0.4, 0.3)
    for p in cases:
        assert eval_ilt(p, pt).value == pytest.approx(eval_euler(p, pt).value, rel=1e-7)


def test_kdf_inversion():
    spec = KdFSpec(2.0, upper_x=(1.0,), upper_y=(0.5,))
    pt = EvalPoint(0.5, 0.8)
    assert eval_kdf_ilt(spec, pt).value == pytest.approx(eval_kdf_series(spec, pt).value, rel=1e-7)


def test_laplace_pairs():
    assert laplace_pair_check("lapFa", {"a": 1.0}, 1.0, [2.0]) < 1e-8
    assert laplace_pair_check("lapFb", {"a": 2.0, "b": 2.0}, 0.7, [0.5, 1, 3]) < 1e-10
    assert laplace_pair_check("lapFc", {"a": 1.5, "b": 1.5, "c": 2.5}, 0.7, [0.5, 1, 3]) < 1e-8
    assert laplace_pair_check("eq29", {"upper": [0.5, 1.2], "lower": [1.5], "mu": 2.0}, 0.4, [1, 2]) < 1e-8
    with pytest.raises(DomainError):
        laplace_pair_check("lapFa", {"a": 1.0}, 1.0, [-1.0])


@pytest.mark.parametrize("b,bp,g", [(0.5, 0.7, 2.5), (1.0, 1.0, 3.0), (0.3, 1.1, 1.7)])
def test_tauberian_slope(b, bp, g):
    assert tauberian_slope(b, bp, g, 0.8, 1.3) == pytest.approx(b + bp - g, abs=1e-3)
