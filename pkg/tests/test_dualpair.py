from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afpp.dualpair import (AffineOnGenerators, Composition, Constant, ConstantTail,
                           ConvexBody, Functional, PeriodicSigns, SeminormFamily, Shift,
                           SparsePoint, WeightedShift, hull_distance, identity_map,
                           membership, pair, pairing_matrix, phi_map, seminorm_eval,
                           selfmap_from_json)
from afpp.errors import DimensionCapExceeded, LevelOutOfRange

e = SparsePoint.basis


# -- oracle examples ---------------------------------------------------------

def test_pair_coordinate():
    assert pair(Functional.coordinate(1), e(1)) == 1


def test_pair_all_ones_sums_coordinates():
    assert pair(Functional.all_ones(), SparsePoint({1: 0.5, 3: 0.25})) == 0.75


def test_pair_alternating_sign_at_index_four():
    assert pair(Functional.alternating(), e(4)) == -1


def test_seminorm_prefix_ell1():
    x = SparsePoint({1: 1, 2: -1, 5: 7})
    assert seminorm_eval(SeminormFamily.ell1_prefix(5), 2, x) == 2


@pytest.mark.parametrize("family", [
    SeminormFamily.ell1_prefix(3),
    SeminormFamily.sup_prefix([1.0, 2.0], 3),
    SeminormFamily.functional_sup([[Functional.all_ones()], [Functional.alternating()]]),
])
def test_seminorm_of_zero(family):
    for n in range(1, family.levels + 1):
        assert seminorm_eval(family, n, SparsePoint.zero()) == 0


def test_seminorm_functional_batch():
    fam = SeminormFamily.functional_sup([[Functional.coordinate(1), Functional.all_ones()]])
    assert seminorm_eval(fam, 1, SparsePoint({1: 0.5, 2: 0.5})) == 1


def test_seminorm_level_out_of_range():
    with pytest.raises(LevelOutOfRange):
        seminorm_eval(SeminormFamily.ell1_prefix(2), 3, e(1))


def test_membership_midpoint():
    C = ConvexBody.hull([e(1), e(2)])
    res = membership(C, SparsePoint({1: 0.5, 2: 0.5}))
    assert res.inside
    np.testing.assert_allclose(res.coefficients, [0.5, 0.5], atol=1e-9)


def test_membership_outside_with_gap():
    C = ConvexBody.hull([e(1), e(2)])
    res = membership(C, e(3))
    assert not res.inside
    gap = pair(res.witness, e(3)) - max(pair(res.witness, g) for g in C.generators)
    assert gap >= 1 - 1e-9


def test_membership_simplex_vertex():
    C = ConvexBody.simplex_face([1, 2, 3, 4])
    res = membership(C, e(1))
    assert res.inside
    np.testing.assert_array_equal(res.coefficients, [1, 0, 0, 0])


def test_phi_map_examples():
    np.testing.assert_array_equal(
        phi_map([Functional.coordinate(1), Functional.coordinate(2)], e(1)), [1, 0])
    np.testing.assert_array_equal(
        phi_map([Functional.all_ones(), Functional.alternating()], SparsePoint.zero()), [0, 0])
    np.testing.assert_allclose(
        phi_map([Functional.all_ones(), Functional.coordinate(2)], SparsePoint({1: 0.3, 2: 0.7})),
        [1.0, 0.7])


def test_phi_map_needs_functionals():
    with pytest.raises(ValueError):
        phi_map([], e(1))


# -- representation ----------------------------------------------------------

def test_zero_entries_dropped():
    x = SparsePoint({1: 0, 2: 3, 5: 0.0})
    assert x.support() == (2,)
    assert (e(1) - e(1)).support() == ()


def test_dimension_cap():
    with pytest.raises(DimensionCapExceeded):
        SparsePoint({10_001: 1})
    with pytest.raises(DimensionCapExceeded):
        membership(ConvexBody.hull([e(1)]), e(50), cap=10)


def test_one_based_indices():
    with pytest.raises(ValueError):
        SparsePoint({0: 1})
    with pytest.raises(ValueError):
        Functional({0: 1})


def test_tail_alignment_after_head():
    f = Functional({1: 5, 2: 5}, PeriodicSigns((1, -1)))
    assert [f.coefficient(i) for i in range(1, 7)] == [5, 5, 1, -1, 1, -1]
    assert f.tail_start == 3
    assert f.sup_norm() == 5


def test_functional_json_roundtrip():
    f = Functional({2: 0.5}, PeriodicSigns((1, 1, -1), 0.25))
    assert Functional.from_json(f.to_json()) == f
    g = Functional({1: 1}, ConstantTail(-2))
    assert Functional.from_json(g.to_json()) == g


def test_point_json_roundtrip():
    x = SparsePoint({3: 1, 7: -0.5})
    assert SparsePoint.from_json(x.to_json()) == x


def test_body_json_roundtrip():
    for C in (ConvexBody.simplex_face([2, 3]), ConvexBody.positive_cone_cap([1, 4], 2.0),
              ConvexBody.hull([e(1), SparsePoint({2: 1, 3: 1})])):
        D = ConvexBody.from_json(C.to_json())
        assert D.generators == C.generators
        assert D.structure == C.structure


def test_pairing_matrix_shape():
    M = pairing_matrix([Functional.all_ones()], [e(1), e(2), e(3)])
    assert M.shape == (1, 3)


def test_positive_cone_cap_membership():
    C = ConvexBody.positive_cone_cap([1, 2, 3], 2.0)
    assert membership(C, SparsePoint({1: 0.5, 3: 1.0})).inside
    assert membership(C, SparsePoint.zero()).inside
    assert not membership(C, SparsePoint({1: 1.5, 2: 1.0})).inside
    assert not membership(C, SparsePoint({1: -0.1})).inside


def test_hull_distance():
    assert hull_distance([e(1), e(2)], e(3)) == pytest.approx(2.0)
    assert hull_distance([e(1), e(2)], SparsePoint({1: 0.25, 2: 0.75})) == pytest.approx(0.0)


# -- self maps -----------------------------------------------------------------

def test_shift_is_cyclic_in_window():
    S = Shift((2, 4))
    assert S(SparsePoint({1: 1, 2: 2, 4: 3})) == SparsePoint({1: 1, 3: 2, 2: 3})


def test_weighted_shift_scales():
    W = WeightedShift([0.5, 1.0], (1, 2))
    assert W(SparsePoint({1: 1, 2: 1})) == SparsePoint({2: 0.5, 1: 1.0})
    assert W.lipschitz() == 1.0


def test_composition_order_and_identity():
    C = ConvexBody.simplex_face([1, 2, 3])
    S = Shift((1, 3), C)
    comp = Composition([S, S], C)
    assert comp(e(1)) == e(3)
    assert identity_map(C)(e(2)) == e(2)


def test_affine_requires_independent_generators():
    C = ConvexBody.hull([e(1), e(1) * 2, e(1) * 3])
    with pytest.raises(ValueError):
        AffineOnGenerators([e(1)] * 3, C)


def test_affine_map_extends_images():
    C = ConvexBody.hull([e(1), e(2)])
    f = AffineOnGenerators([e(2), e(1)], C)
    assert f(SparsePoint({1: 0.25, 2: 0.75})).to_dense([1, 2]) == pytest.approx([0.75, 0.25])
    assert f.check_self_map()


def test_selfmap_json_roundtrip():
    C = ConvexBody.simplex_face([1, 2, 3])
    maps = [Constant(e(1), C), Shift((1, 3), C), WeightedShift([1, 1, 1], (1, 3), C),
            AffineOnGenerators([e(2), e(3), e(1)], C), identity_map(C),
            Composition([Shift((1, 3), C), Constant(e(2), C)], C)]
    x = SparsePoint({1: 0.2, 2: 0.3, 3: 0.5})
    for m in maps:
        m2 = selfmap_from_json(m.to_json(), C)
        assert (m2(x) - m(x)).norm1() < 1e-12


def test_check_self_map_detects_escape():
    C = ConvexBody.simplex_face([1, 2])
    assert not Constant(e(5), C).check_self_map()


# -- properties ----------------------------------------------------------------

fractions = st.fractions(min_value=-10, max_value=10, max_denominator=50)
sparse = st.dictionaries(st.integers(1, 30), fractions, max_size=8).map(SparsePoint)
tails = st.one_of(st.none(), fractions.map(ConstantTail),
                  st.lists(st.sampled_from([1, -1]), min_size=1, max_size=6)
                  .map(lambda p: PeriodicSigns(tuple(p))))
functionals = st.builds(Functional, st.dictionaries(st.integers(1, 30), fractions, max_size=6),
                        tails)


@given(functionals, sparse, sparse, fractions, fractions)
def test_pair_bilinear_exact(f, x, y, a, b):
    assert pair(f, x * a + y * b) == a * pair(f, x) + b * pair(f, y)


@given(sparse, sparse, fractions)
def test_point_arithmetic(x, y, c):
    assert (x + y) - y == x
    assert (x * c).norm1() == abs(c) * x.norm1()
    assert all(v != 0 for _, v in (x + y).items())


family_strategy = st.one_of(
    st.integers(1, 6).map(SeminormFamily.ell1_prefix),
    st.lists(st.fractions(Fraction(1, 10), 5, max_denominator=20), min_size=1, max_size=4).map(
        lambda w: SeminormFamily.sup_prefix(w, 5)),
    st.lists(st.lists(functionals, min_size=1, max_size=2), min_size=1, max_size=4).map(
        SeminormFamily.functional_sup),
)


@given(family_strategy, sparse, sparse, fractions)
def test_seminorm_monotone_and_seminorm(family, x, y, c):
    for n in range(1, family.levels + 1):
        p = seminorm_eval(family, n, x)
        if n < family.levels:
            assert p <= seminorm_eval(family, n + 1, x)
        assert seminorm_eval(family, n, x + y) <= p + seminorm_eval(family, n, y)
        assert seminorm_eval(family, n, x * c) == abs(c) * p


@given(family_strategy, st.lists(sparse, min_size=1, max_size=4),
       st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_polyhedral_rows_match_seminorm(family, vectors, coeffs):
    a = np.array(coeffs[:len(vectors)])
    x = SparsePoint.combination(a, vectors)
    for n in range(1, family.levels + 1):
        R, kind = family.polyhedral_rows(n, vectors)
        y = R @ a
        val = np.abs(y).sum() if kind == "l1" else np.abs(y).max(initial=0.0)
        assert val == pytest.approx(float(seminorm_eval(family, n, x)), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_membership_roundtrip_and_separation(seed):
    rng = np.random.default_rng(seed)
    m, dim = int(rng.integers(1, 6)), int(rng.integers(1, 8))
    gens = [SparsePoint.from_dense(rng.integers(-3, 4, dim).astype(float)) for _ in range(m)]
    C = ConvexBody.hull(gens)
    lam = rng.dirichlet(np.ones(m))
    x = C.point(lam)
    res = membership(C, x)
    assert res.inside and res.error <= 1e-9
    assert (C.point(res.coefficients) - x).norm1() <= 1e-8
    # a random point, inside or out
    z = SparsePoint.from_dense(rng.uniform(-3, 3, dim + 1))
    res = membership(C, z)
    if res.inside:
        assert (C.point(res.coefficients) - z).norm1() <= 1e-9 + 1e-12
    else:
        top = max(float(pair(res.witness, g)) for g in C.generators)
        assert float(pair(res.witness, z)) > top + 1e-9
        assert res.witness.sup_norm() <= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convexity_of_members(seed):
    rng = np.random.default_rng(seed)
    C = ConvexBody.hull([SparsePoint.from_dense(rng.normal(size=4)) for _ in range(4)])
    pts = C.sample(rng, 3)
    w = rng.dirichlet(np.ones(3))
    assert membership(C, SparsePoint.combination(w, pts), 1e-8).inside


def test_exact_rationals_survive():
    x = SparsePoint({1: Fraction(1, 3), 2: Fraction(2, 3)})
    assert pair(Functional.all_ones(), x) == 1
    assert isinstance(pair(Functional.coordinate(1), x), Fraction)
