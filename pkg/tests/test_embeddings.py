from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st
from sympy.polys.domains import QQ_I

from algebra import IntMatrix, scalar, spectral_radius
from birmap import (
    BirMap, ProjPoint, identity, equals, compose, inverse_check, iterate_maps, iterate_degrees, classify_growth,
    dynamical_degree_estimate, base_points_on_grid, probe_grid,
)
from cli import EXPECTED_GROWTH
from conftest import group_words
from embeddings import (
    FAMILIES, EmbeddingSpec, make_spec, evaluate, direct_image, character, generator_images,
    theta_eps_r2, theta_eps_positive, verify_relations, orbit_disjointness_check, hypothesis_report,
    p_zeros_and_poles, cayley_quotient, cayley_check,
)
from sl2z import Mat2, parse_word, matrix_to_word, classify, syllable_form, enumerate_words
from utils import SpecError, ResourceError, UsageError

x, y = sympy.symbols("x y")

EPSILONS = ["1/2", "1", "2", "3"]
RELATION_SPECS = (
    [("theta_s", {}), ("theta_minus", {}), ("theta_e", {})]
    + [("theta_eps", {"eps": e}) for e in EPSILONS]
    + [("theta_n", {"n": n}) for n in range(4)]
    + [("theta_P", {}), ("theta_k", {"k": 2, "mu": 5})]
)


def abs_entries(m: Mat2) -> tuple:
    return tuple(abs(v) for v in m.entries())


# ─── 参数校验 ───

def test_make_spec_defaults_and_parsing():
    spec = make_spec("theta_eps", eps="1/2")
    assert spec.eps == scalar(Fraction(1, 2))
    assert spec.eps_positive
    assert make_spec("theta_k").k == 2
    assert str(make_spec("theta_n", n=3)) == "theta_n(n=3)"
    assert str(make_spec("theta_s")) == "theta_s"
    assert set(FAMILIES) == {"theta_s", "theta_minus", "theta_eps", "theta_e", "theta_n", "theta_P", "theta_k"}


@pytest.mark.parametrize("family, params", [
    ("theta_eps", {"eps": 0}),
    ("theta_k", {"k": 3}),
    ("theta_k", {"mu": 0}),
    ("theta_n", {"n": -1}),
    ("theta_P", {"P": "(x-2)**2/(x-3)"}),
    ("theta_P", {"P": "(x-2)*(x-3)/(x-2)"}),
    ("theta_P", {"P": "y/(x-3)"}),
    ("theta_w", {}),
])
def test_invalid_specs(family, params):
    with pytest.raises(SpecError):
        make_spec(family, **params)


def test_spec_errors_are_usage_errors():
    with pytest.raises(UsageError):
        EmbeddingSpec("theta_eps")


def test_spec_json_round_trip():
    spec = make_spec("theta_k", k=4, mu="1/2+i")
    assert EmbeddingSpec.from_json(spec.to_json()) == spec


def test_negative_eps_is_allowed_but_flagged():
    spec = make_spec("theta_eps", eps=-1)
    assert not spec.eps_positive
    report = hypothesis_report(spec)
    assert report["hypotheses"][0]["holds"] is False


# ─── 表现关系 ───

@pytest.mark.parametrize("family, params", RELATION_SPECS)
def test_presentation_relations(family, params):
    report = verify_relations(make_spec(family, **params))
    assert report.passed, report.checks
    assert set(report.checks) == {"S^4 = 1", "(RS)^3 = 1", "S^2 RS = RS S^2", "θ(S^2) ≠ 1"}


@pytest.mark.slow
def test_presentation_relations_theta_k4():
    assert verify_relations(make_spec("theta_k", k=4, mu=5)).passed


def test_generator_images_are_inverse_pairs(theta_eps2):
    images = generator_images(theta_eps2)
    assert inverse_check(images["R"], images["R^-1"])
    assert inverse_check(images["S"], images["S^-1"])


def test_theta_p_rs_images_are_inverse(theta_p):
    images = generator_images(theta_p)
    assert images.alphabet == "S(RS)"
    assert inverse_check(images["RS"], images["RS^-1"])


def test_evaluate_is_a_homomorphism(theta_s):
    u, v = parse_word("R S^-1 R^2"), parse_word("S R^-1")
    assert equals(evaluate(theta_s, u * v), compose(evaluate(theta_s, u), evaluate(theta_s, v)))
    assert equals(evaluate(theta_s, "1"), identity("P2"))


@pytest.mark.parametrize("family", [f for f in FAMILIES if f != "theta_k"])
@settings(max_examples=10, deadline=None)
@given(u=group_words(max_terms=2, max_exp=2), v=group_words(max_terms=2, max_exp=2))
def test_every_family_is_a_homomorphism(family, u, v):
    spec = make_spec(family)
    assert equals(evaluate(spec, u * v), compose(evaluate(spec, u), evaluate(spec, v))), f"{u} · {v}"


@settings(max_examples=10, deadline=None)
@given(u=group_words(max_terms=1, max_exp=1), v=group_words(max_terms=2, max_exp=1))
def test_theta_k_is_a_homomorphism(theta_k2, u, v):
    assert equals(evaluate(theta_k2, u * v), compose(evaluate(theta_k2, u), evaluate(theta_k2, v)))


# ─── 闭式像与特征 ───

@settings(max_examples=20, deadline=None)
@given(group_words(max_terms=4, max_exp=2))
def test_direct_image_matches_evaluate_theta_s(w):
    spec = make_spec("theta_s")
    assert equals(direct_image(spec, w.matrix), evaluate(spec, w))


@pytest.mark.parametrize("family, params, word", [
    ("theta_e", {}, "R S^-1 R^2"),
    ("theta_n", {"n": 0}, "R S R^-1"),
    ("theta_n", {"n": 1}, "S R^2"),
    ("theta_n", {"n": 2}, "R S^-1 R^2"),
])
def test_direct_image_matches_evaluate(family, params, word):
    spec = make_spec(family, **params)
    w = parse_word(word)
    assert equals(direct_image(spec, w.matrix), evaluate(spec, w))


def test_direct_image_rejects_other_families(theta_eps2):
    with pytest.raises(UsageError):
        direct_image(theta_eps2, Mat2(1, 1, 0, 1))


def test_character():
    even, odd = make_spec("theta_n", n=2), make_spec("theta_n", n=1)
    assert character(even, parse_word("S")) == QQ_I(0, 1)
    assert character(even, parse_word("R")) == QQ_I(0, -1)
    assert character(even, parse_word("R S")) == QQ_I.one
    assert character(odd, parse_word("S R^3")) == QQ_I.one
    with pytest.raises(UsageError):
        character(make_spec("theta_s"), parse_word("S"))


# ─── 次数规律 ───

@pytest.mark.parametrize("eps", EPSILONS)
def test_theta_eps_quadridegree_law(eps):
    spec = make_spec("theta_eps", eps=eps)
    for w in enumerate_words(2):
        assert evaluate(spec, w).quadridegree() == abs_entries(w.matrix), str(w)


@pytest.mark.slow
@pytest.mark.parametrize("eps", EPSILONS)
def test_theta_eps_quadridegree_law_four_syllables(eps):
    spec = make_spec("theta_eps", eps=eps)
    for w in enumerate_words(4):
        assert evaluate(spec, w).quadridegree() == abs_entries(w.matrix), str(w)


@pytest.mark.parametrize("rows", [((2, 1), (1, 1)), ((1, 3), (0, 1)), ((3, 2), (4, 3)), ((1, 0), (2, 1))])
def test_theta_eps_positive_recursion(rows):
    m = Mat2.from_rows(rows)
    f = theta_eps_positive(2, m)
    assert f.quadridegree() == m.entries()
    assert equals(f, evaluate(make_spec("theta_eps", eps=2), matrix_to_word(m)))


def test_theta_eps_r2_matches_word():
    r2, r2_inv = theta_eps_r2(3)
    spec = make_spec("theta_eps", eps=3)
    assert equals(r2, evaluate(spec, "R S R S S"))
    assert inverse_check(r2, r2_inv)


def test_theta_eps_base_points():
    spec = make_spec("theta_eps", eps=2)
    grid = probe_grid("P1xP1")
    assert len(grid) == 50
    r1 = evaluate(spec, "R")
    r1_inv = evaluate(spec, "R^-1")
    expected = {ProjPoint.affine("P1xP1", 2, -1), ProjPoint.affine("P1xP1", -2, 1)}
    assert set(base_points_on_grid(r1, grid)) == expected
    expected_inv = {ProjPoint.affine("P1xP1", 1, 2), ProjPoint.affine("P1xP1", -1, -2)}
    assert set(base_points_on_grid(r1_inv, grid)) == expected_inv


def test_theta_minus_degrees_match_theta_s(theta_s, theta_minus):
    words = list(enumerate_words(3))[:200]
    for w in words:
        assert evaluate(theta_minus, w).degree() == evaluate(theta_s, w).degree(), str(w)


def test_theta_s_preserves_type(theta_s):
    for w in enumerate_words(2):
        degrees = iterate_degrees(evaluate(theta_s, w), 12)
        assert classify_growth(degrees).kind == EXPECTED_GROWTH[classify(w.matrix).kind], str(w)


@pytest.mark.parametrize("word, kind", [
    ("S", "bounded"), ("R S", "bounded"), ("R", "linear"), ("R^-2", "linear"), ("R S^2 R S", "linear"),
])
def test_theta_eps_elliptic_and_parabolic_words(theta_eps2, word, kind):
    degrees = iterate_degrees(evaluate(theta_eps2, word), 12)
    assert classify_growth(degrees).kind == kind


def test_theta_eps_parabolic_iterates_are_cheap(theta_eps2):
    f = evaluate(theta_eps2, "R S^2 R S")
    degrees = iterate_degrees(f, 12)
    assert degrees == [4 * n for n in range(1, 13)]
    assert classify_growth(degrees).stats == {"slope": 4}


@pytest.mark.slow
@pytest.mark.parametrize("family, params", [("theta_s", {}), ("theta_eps", {"eps": 2}), ("theta_eps", {"eps": 1})])
def test_type_preservation_three_syllables(family, params):
    spec = make_spec(family, **params)
    for w in enumerate_words(3):
        kind = classify(w.matrix).kind
        if family == "theta_eps" and kind == "hyperbolic":
            continue
        degrees = iterate_degrees(evaluate(spec, w), 12)
        assert classify_growth(degrees).kind == EXPECTED_GROWTH[kind], str(w)


def _exact_iterate_count(m: Mat2, max_degree: int = 300, most: int = 4) -> int:
    """θ_ε 双曲迭代的项数按 λ^{2n} 增长，只精确计算次数不超过 max_degree 的前几次。"""
    n = 1
    while n < most and sum(abs_entries(m.power(n + 1))) <= max_degree:
        n += 1
    return n


@pytest.mark.slow
@pytest.mark.parametrize("eps", ["1", "2"])
def test_theta_eps_hyperbolic_words_three_syllables(eps):
    spec = make_spec("theta_eps", eps=eps)
    for w in enumerate_words(3):
        if classify(w.matrix).kind != "hyperbolic":
            continue
        f = evaluate(spec, w)
        for n, g in enumerate(iterate_maps(f, _exact_iterate_count(w.matrix)), start=1):
            assert g.quadridegree() == abs_entries(w.matrix.power(n)), f"{w} ^ {n}"
        degrees = [sum(abs_entries(w.matrix.power(n))) for n in range(1, 13)]
        assert classify_growth(degrees).kind == "exponential", str(w)


def theta_n_degree(n: int, m: Mat2) -> int:
    """c = 0 时为仿射线性；否则 n = 0 为 2，n ≥ 1 为 n。"""
    if m.c == 0:
        return 1
    return 2 if n == 0 else n


@pytest.mark.parametrize("n", range(4))
def test_theta_n_degrees_are_bounded(n):
    spec = make_spec("theta_n", n=n)
    for w in enumerate_words(2):
        assert evaluate(spec, w).degree() == theta_n_degree(n, w.matrix), str(w)


@pytest.mark.slow
@pytest.mark.parametrize("n", range(4))
def test_theta_n_degrees_are_bounded_four_syllables(n):
    spec = make_spec("theta_n", n=n)
    for w in enumerate_words(4):
        degree = evaluate(spec, w).degree()
        assert degree <= max(n, 2), str(w)
        assert degree == theta_n_degree(n, w.matrix), str(w)


@pytest.mark.parametrize("word, syllables", [("R", 1), ("R S", 1), ("S R^-1", 1), ("R^2", 2), ("R S^-1 R^-1", 2)])
def test_theta_k_degree_law(theta_k2, word, syllables):
    assert evaluate(theta_k2, word).degree() == 2 ** (2 * syllables)


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 4])
def test_theta_k_degree_law_three_syllables(k):
    spec = make_spec("theta_k", k=k, mu=5)
    for w in enumerate_words(3):
        assert evaluate(spec, w).degree() == k ** (2 * syllable_form(w).count), str(w)


def test_theta_k_iterates(theta_k2):
    degrees = iterate_degrees(evaluate(theta_k2, "R"), 3)
    assert degrees == [4, 16, 64]


def test_theta_p_is_parabolic_on_hyperbolic_word():
    spec = make_spec("theta_P", P="(x-2*i)/(x-3*i)")
    w = parse_word("R S R^-1 S")
    assert classify(w.matrix).kind == "hyperbolic"
    degrees = iterate_degrees(evaluate(spec, w), 10)
    assert classify_growth(degrees).kind == "linear"


def test_default_theta_p_is_parabolic_on_hyperbolic_word(theta_p):
    degrees = iterate_degrees(evaluate(theta_p, "R S R^-1 S"), 10)
    assert degrees == [2 * n + 2 for n in range(1, 11)]
    assert classify_growth(degrees).kind == "linear"


# ─── 动力学次数 ───

def test_theta_s_estimate_approaches_spectral_radius(theta_s):
    w = parse_word("R S^-1 R^-1 S")
    assert w.matrix == Mat2(2, 1, 1, 1)
    est = dynamical_degree_estimate(evaluate(theta_s, w), 20)
    lo, hi = spectral_radius(IntMatrix(w.matrix.tolist()), Fraction(1, 10 ** 9))
    assert abs(est.last_ratio - lo) < Fraction(1, 10 ** 6)
    assert abs(est.last_ratio - hi) < Fraction(1, 10 ** 6)


@pytest.mark.slow
@pytest.mark.parametrize("word", ["R", "R^-1", "S^-1 R^-1 S"])
def test_theta_k_last_ratio_is_k_squared(theta_k2, word):
    assert syllable_form(parse_word(word)).count == 1
    est = dynamical_degree_estimate(evaluate(theta_k2, word), 4)
    assert est.degrees == (4, 16, 64, 256)
    assert abs(est.last_ratio - theta_k2.k ** 2) < Fraction(1, 10 ** 6)


def test_resource_cap(theta_k2):
    with pytest.raises(ResourceError):
        evaluate(theta_k2, "R^3", cap=10)


# ─── 假设与证书 ───

def test_orbit_certificate_accepts_generic_points():
    cert = orbit_disjointness_check([scalar(0, 2), scalar(0, 3)], depth=6)
    assert cert.holds
    assert bool(cert)
    assert cert.to_dict()["verified_to_depth"] == 6
    assert cert.elements_checked > 0


@pytest.mark.parametrize("values", [[scalar(2), scalar(3)], [scalar(2)], [scalar(0, 1)], [None], [scalar(1), scalar(1)]])
def test_orbit_certificate_finds_witness(values):
    cert = orbit_disjointness_check(values, depth=6)
    assert not cert.holds
    assert cert.witness


def test_orbit_certificate_depth_must_be_positive():
    with pytest.raises(UsageError):
        orbit_disjointness_check([scalar(0, 2)], depth=0)


def test_p_zeros_and_poles():
    points, unresolved = p_zeros_and_poles(make_spec("theta_P", P="(x-2*i)/(x-3*i)"))
    assert set(points) == {scalar(0, 2), scalar(0, 3)}
    assert unresolved == []
    points, unresolved = p_zeros_and_poles(make_spec("theta_P", P="(x**2+2)/(x-1)"))
    assert None in points and scalar(1) in points
    assert unresolved and "x**2 + 2" in unresolved[0]


def test_default_theta_p_hypothesis_is_reported_not_enforced(theta_p):
    report = hypothesis_report(theta_p)
    assert report["hypotheses"][0]["holds"] is False
    assert "R" in report["hypotheses"][0]["witness"]
    assert verify_relations(theta_p).passed


@settings(max_examples=20, deadline=None)
@given(st.integers(-6, 6).filter(lambda n: n != 0))
def test_integer_translates_share_an_orbit(n):
    cert = orbit_disjointness_check([scalar(0), scalar(n)], depth=6)
    assert not cert.holds
    assert "R" in cert.witness


def test_theta_k_mu_hypothesis():
    item = hypothesis_report(make_spec("theta_k", mu=1))["hypotheses"][0]
    assert item["holds"] is False
    assert item["verified_to_depth"] == 6
    assert hypothesis_report(make_spec("theta_k", mu="2*i"))["hypotheses"][0]["holds"] is True


# ─── Cayley 三次曲面 ───

def test_cayley_quotient_is_bidegree_two():
    assert all(c.degrees == (2, 2) for c in cayley_quotient())


def test_cayley_check():
    report = cayley_check()
    assert report["invariant"] and report["on_cubic"] and report["passed"]


def test_cayley_check_detects_non_invariant_involution():
    swap = BirMap.from_affine("P1xP1", (y, x), name="swap")
    report = cayley_check(swap)
    assert not report["invariant"]
    assert report["on_cubic"]
