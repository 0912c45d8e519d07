from fractions import Fraction

import pytest
import sympy

from algebra import scalar
from birmap import (
    BirMap, ProjPoint, GrowthClass, identity, compose, compose_all, equals, inverse_check,
    iterate_maps, iterate_degrees, classify_growth, dynamical_degree_estimate, nth_root,
    is_base_point, apply, base_points_on_grid, probe_grid,
)
from utils import UsageError, ResourceError, IndeterminacyError, DegenerateCompositionError

x, y = sympy.symbols("x y")


@pytest.fixture
def henon():
    """(y, x + y²) 的齐次形式，次数 2。"""
    return BirMap.from_affine("P2", (y, x + y ** 2), name="henon")


@pytest.fixture
def henon_inverse():
    return BirMap.from_affine("P2", (y - x ** 2, x), name="henon^-1")


def test_from_affine_homogenizes(henon):
    z = sympy.Symbol("z")
    assert henon.degree() == 2
    assert [c.as_expr() for c in henon.components] == [y * z, x * z + y ** 2, z ** 2]


def test_common_factor_is_removed():
    z = sympy.Symbol("z")
    f = BirMap.from_components("P2", [x * z, y * z, z ** 2])
    assert f.degree() == 1
    assert f == identity("P2")


def test_components_are_normalized():
    f = BirMap.from_components("P2", [2 * x, 2 * y, 2 * sympy.Symbol("z")])
    assert f.components == identity("P2").components


def test_degenerate_map_is_rejected():
    with pytest.raises(DegenerateCompositionError):
        BirMap.from_components("P2", [0, 0, 0])


def test_p2_has_no_quadridegree(henon):
    with pytest.raises(UsageError):
        henon.quadridegree()


def test_p1p1_quadridegree():
    f = BirMap.from_affine("P1xP1", ((x + 2 * y) / (2 + x * y), 2 * y))
    assert f.quadridegree() == (1, 1, 0, 1)
    assert f.degree() == 3


def test_compose_with_inverse(henon, henon_inverse):
    assert inverse_check(henon, henon_inverse)
    assert equals(compose(henon, henon_inverse), identity("P2"))
    assert not equals(henon, identity("P2"))


def test_compose_order_is_right_to_left():
    f = BirMap.from_affine("P2", (x + 1, y))
    g = BirMap.from_affine("P2", (x * y, y))
    # (g∘f)(x, y) = ((x+1)·y, y)
    assert compose(g, f) == BirMap.from_affine("P2", ((x + 1) * y, y))
    assert compose_all([g, f]) == compose(g, f)
    assert compose(f, g) == BirMap.from_affine("P2", (x * y + 1, y))


def test_compose_rejects_mixed_ambients(henon):
    with pytest.raises(UsageError):
        compose(henon, identity("P1xP1"))


def test_affine_form(henon):
    fx, fy = henon.affine_form()
    assert sympy.simplify(fx - y) == 0
    assert sympy.simplify(fy - x - y ** 2) == 0


def test_json_round_trip(henon):
    data = henon.to_json()
    assert data["schema_version"] == 1
    assert BirMap.from_json(data) == henon
    data["schema_version"] = 99
    with pytest.raises(UsageError):
        BirMap.from_json(data)


def test_iterates_of_henon_grow_exponentially(henon):
    degrees = iterate_degrees(henon, 8)
    assert degrees == [2 ** n for n in range(1, 9)]
    assert classify_growth(degrees).kind == "exponential"
    est = dynamical_degree_estimate(henon, 6)
    assert est.last_ratio == 2
    assert est.root == 2


def test_iterate_cap_raises_resource_error(henon):
    with pytest.raises(ResourceError) as excinfo:
        list(iterate_maps(henon, 10, cap=5))
    assert excinfo.value.iterate >= 2


def test_iterate_needs_positive_count(henon):
    with pytest.raises(UsageError):
        iterate_degrees(henon, 0)


@pytest.mark.parametrize("seq, kind", [
    ([1, 1, 1, 1, 1, 1, 1, 1], "bounded"),
    ([1, 2, 1, 2, 1, 2, 1, 2], "bounded"),
    ([1, 2, 3, 4, 5, 6, 7, 8], "linear"),
    ([9, 1, 2, 3, 4, 5, 6, 7], "linear"),
    ([4, 6, 4, 1, 4, 6, 4, 1, 4, 6], "bounded"),
    ([9, 2, 4, 3, 1, 6, 2, 5], "undetermined"),
    ([1, 4, 9, 16, 25, 36, 49, 64], "quadratic"),
    ([1, 3, 8, 21, 55, 144, 377, 987], "exponential"),
    ([1, 2, 4, 7, 8, 20, 21, 50], "undetermined"),
])
def test_classify_growth(seq, kind):
    assert classify_growth(seq).kind == kind


def test_classify_growth_linear_slope():
    g = classify_growth([2, 4, 6, 8, 10, 12])
    assert isinstance(g, GrowthClass)
    assert g.to_dict()["slope"] == 2


def test_bounded_needs_a_repeating_tail():
    assert classify_growth([1, 2, 1, 2, 1, 2, 1, 2]).to_dict()["period"] == 2
    assert classify_growth([3, 3, 3, 3, 3, 3]).to_dict()["period"] == 1
    # 周期 6 需要 window + 6 项才能确认
    order_six = [2, 3, 4, 3, 2, 1] * 2
    assert classify_growth(order_six).stats == {"period": 6}
    assert classify_growth(order_six[:8]).kind != "bounded"


def test_classify_growth_needs_six_terms():
    with pytest.raises(UsageError):
        classify_growth([1, 2, 3, 4, 5])


def test_dynamical_degree_from_given_degrees():
    est = dynamical_degree_estimate(None, 4, degrees=[3, 8, 21, 55])
    assert est.last_ratio == Fraction(55, 21)
    assert nth_root(16, 4) == 2
    with pytest.raises(UsageError):
        dynamical_degree_estimate(None, 3, degrees=[1, 2, 3])


def test_proj_point_normalization():
    p = ProjPoint("P2", (2, 4, 2))
    assert p.coords == ProjPoint("P2", (1, 2, 1)).coords
    assert ProjPoint.affine("P1xP1", None, 3).affine_coords() == (None, scalar(3))
    with pytest.raises(UsageError):
        ProjPoint("P2", (0, 0, 0))


def test_base_points_of_quadratic_involution():
    z = sympy.Symbol("z")
    sigma = BirMap.from_components("P2", [y * z, x * z, x * y])
    grid = [ProjPoint("P2", c) for c in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))]
    assert base_points_on_grid(sigma, grid) == grid[:3]
    assert apply(sigma, ProjPoint("P2", (1, 2, 1))) == ProjPoint("P2", (2, 1, 2))
    with pytest.raises(IndeterminacyError):
        apply(sigma, ProjPoint("P2", (0, 0, 1)))


def test_probe_grid_size():
    assert len(probe_grid("P1xP1")) == 50
    assert len(probe_grid("P2", radius=1, with_infinity=False)) == 9
    assert not is_base_point(identity("P2"), probe_grid("P2")[0])
