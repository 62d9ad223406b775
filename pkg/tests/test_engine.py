import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afpp.dualpair import (AffineOnGenerators, Constant, ConvexBody, Functional, FunctionMap,
                           Shift, SparsePoint, identity_map, membership, pair, phi_map)
from afpp.engine import (DistancePartition, KuhnPartition, afp_sequence, approx_fixed_point,
                         build_net, dyadic_functionals, invariant_separable_hull,
                         ky_fan_fixed_point, recompute_residuals)
from afpp.errors import SamplerBudgetExceeded

from instances import random_functional, random_instance

e = SparsePoint.basis


# -- nets ---------------------------------------------------------------------------

def test_net_singleton_body():
    net = build_net(ConvexBody.hull([e(1)]), None, [Functional.coordinate(1)], 0.1)
    assert net.net.tolist() == [[1.0]]
    assert net.reps == [e(1)]


def test_net_interval():
    C = ConvexBody.simplex_face([1, 2])
    net = build_net(C, None, [Functional.coordinate(1)], 0.5)
    assert len(net) <= 5
    for t in np.linspace(0, 1, 1001):
        assert net.covers(np.array([t]))


def test_net_constant_image():
    C = ConvexBody.simplex_face([1, 2, 3])
    net = build_net(C, None, [Functional.all_ones()], 0.2)
    assert net.net.tolist() == [[1.0]]


def test_net_reps_match_values():
    C = ConvexBody.hull([e(1), e(2) * 2, SparsePoint({1: 1, 3: -1})])
    funcs = [Functional.coordinate(1), Functional.all_ones()]
    net = build_net(C, None, funcs, 0.1)
    for q, rep in zip(net.net, net.reps):
        np.testing.assert_array_equal(phi_map(funcs, rep), q)


def test_net_sampler_budget():
    C = ConvexBody.simplex_face(range(1, 9))
    funcs = [Functional.coordinate(i) for i in range(1, 9)]
    with pytest.raises(SamplerBudgetExceeded):
        build_net(C, None, funcs, 0.001, sample_budget=100)


def test_net_coverage_ten_thousand_samples():
    rng = np.random.default_rng(0)
    C = ConvexBody.hull([SparsePoint.from_dense(rng.uniform(-1, 1, 5)) for _ in range(4)])
    funcs = [random_functional(rng, 5) for _ in range(2)]
    net = build_net(C, None, funcs, 0.5)
    lam = rng.dirichlet(np.ones(4), 10_000)
    from afpp.dualpair import pairing_matrix
    vals = lam @ pairing_matrix(funcs, C.generators).T
    dist = np.abs(vals[:, None, :] - net.net[None, :, :]).max(axis=2).min(axis=1)
    assert dist.max() < 0.25


def test_nearest_ties_lowest_index():
    C = ConvexBody.simplex_face([1, 2])
    net = build_net(C, None, [Functional.coordinate(1)], 0.5)
    k, _ = net.nearest(np.array([0.5 * (net.net[0, 0] + net.net[1, 0])]))
    assert k == 0


# -- partitions of unity ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_kuhn_partition(d, D, seed):
    rng = np.random.default_rng(seed)
    part = KuhnPartition(d, D)
    for _ in range(5):
        y = rng.dirichlet(np.ones(d + 1))
        hats = part.hats(y)
        assert abs(sum(hats.values()) - 1) <= 1e-12
        assert all(v >= 0 for v in hats.values())
        for key, v in hats.items():
            if v > 0:
                assert part.in_support(key, y)
        # hats reproduce the point from their centres
        np.testing.assert_allclose(sum(v * part.center(k) for k, v in hats.items()), y,
                                   atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_partition(seed):
    rng = np.random.default_rng(seed)
    centers = np.vstack([np.eye(3), rng.dirichlet(np.ones(3), 5)])
    part = DistancePartition(centers, np.r_[np.full(3, 1.75), rng.uniform(0.2, 1, 5)])
    y = rng.dirichlet(np.ones(3))
    h = part.hats(y)
    assert abs(h.sum() - 1) <= 1e-12 and h.min() >= 0
    for i in np.nonzero(h > 0)[0]:
        assert part.in_support(i, y)


def test_distance_partition_uncovered():
    part = DistancePartition(np.array([[1.0, 0.0]]), np.array([0.1]))
    with pytest.raises(ValueError):
        part.hats(np.array([0.0, 1.0]))


# -- approximate fixed points ------------------------------------------------------------

def test_constant_map():
    c = SparsePoint({1: 0.3, 2: 0.3, 4: 0.4})
    C = ConvexBody.hull([e(1), e(2), c])
    rep = approx_fixed_point(C, Constant(c, C), [Functional.coordinate(1),
                                                 Functional.coordinate(2)], 1e-3)
    assert max(rep.residuals) < 1e-3


@pytest.mark.parametrize("eps", [0.5, 0.01])
def test_identity_residual_zero(eps):
    C = ConvexBody.hull([e(1), SparsePoint({2: 1, 3: 2}), e(3) * -1])
    rep = approx_fixed_point(C, identity_map(C), [Functional.all_ones(),
                                                  Functional.alternating()], eps)
    assert rep.residuals == [0.0, 0.0]


def test_shift_on_long_face():
    C = ConvexBody.simplex_face(range(1, 41))
    f = Shift((1, 40), C)
    funcs = [Functional.coordinate(1), Functional.all_ones()]
    rep = approx_fixed_point(C, f, funcs, 0.05)
    assert max(recompute_residuals(funcs, f, rep.point)) < 0.05
    assert membership(C, rep.point, 1e-6).inside


def test_black_box_map_adaptive_cover():
    C = ConvexBody.simplex_face([1, 2, 3])

    def squash(x):
        v = x.to_dense([1, 2, 3]) ** 2 + 0.1
        return SparsePoint.from_dense(v / v.sum())

    f = FunctionMap(squash, C)
    funcs = [Functional.coordinate(1), Functional.coordinate(2)]
    rep = approx_fixed_point(C, f, funcs, 0.01)
    assert max(recompute_residuals(funcs, f, rep.point)) < 0.01


def test_report_json_is_serializable():
    import json
    C = ConvexBody.simplex_face([1, 2, 3])
    rep = approx_fixed_point(C, Shift((1, 3), C), [Functional.coordinate(1)], 0.1)
    json.dumps(rep.to_json())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.01]))
def test_residual_contract_random(seed, eps):
    C, f, funcs = random_instance(np.random.default_rng(seed))
    rep = approx_fixed_point(C, f, funcs, eps)
    res = recompute_residuals(funcs, f, rep.point)
    assert all(r < eps for r in res)
    np.testing.assert_allclose(res, rep.residuals, atol=1e-12)
    assert membership(C, rep.point, 1e-6).inside


# -- sequences -------------------------------------------------------------------------------

def test_dyadic_enumeration_prefix():
    first = list(itertools.islice(dyadic_functionals(), 6))
    heads = [f.head for f in first]
    assert heads[:2] == [{1: -1.0}, {1: 1.0}]
    assert heads[2:4] == [{1: -0.5}, {1: 0.5}]
    assert len(set(first)) == 6
    assert all(f.sup_norm() <= 1 for f in first)


def test_dyadic_enumeration_distinct():
    fs = list(itertools.islice(dyadic_functionals(), 500))
    assert len(set(fs)) == 500


def test_sequence_identity_rows_zero():
    C = ConvexBody.simplex_face([1, 2, 3])
    rep = afp_sequence(C, identity_map(C), dyadic_functionals(), 5)
    assert not rep.residuals.any()


def test_sequence_constant():
    c = SparsePoint({1: 0.5, 2: 0.5})
    C = ConvexBody.simplex_face([1, 2, 3])
    rep = afp_sequence(C, Constant(c, C), dyadic_functionals(), 5)
    assert rep.schedule_ok()
    assert not rep.residuals.any()


def test_sequence_shift_schedule():
    C = ConvexBody.simplex_face(range(1, 7))
    rep = afp_sequence(C, Shift((1, 6), C), dyadic_functionals(), 10)
    assert rep.schedule_ok()
    for n in range(1, 11):
        assert all(rep.residuals[n - 1, i - 1] < 1 / n for i in range(1, n + 1))


# -- Ky Fan ----------------------------------------------------------------------------------

def test_kyfan_identity():
    C = ConvexBody.hull([e(1), e(2), e(3)])
    assert ky_fan_fixed_point(C, identity_map(C), 1e-6).norm_residual == 0


def test_kyfan_half_contraction():
    C = ConvexBody.hull([e(1), e(2), e(3)])
    c = SparsePoint({1: 0.2, 2: 0.3, 3: 0.5})
    f = AffineOnGenerators([e(i) * 0.5 + c * 0.5 for i in (1, 2, 3)], C)
    # error <= residual / (1 - 0.5)
    rep = ky_fan_fixed_point(C, f, 0.5e-6)
    assert (rep.point - c).norm1() <= 1e-6


def test_kyfan_swap_midpoint():
    C = ConvexBody.hull([e(1), e(2)])
    rep = ky_fan_fixed_point(C, AffineOnGenerators([e(2), e(1)], C), 1e-6)
    assert (rep.point - SparsePoint({1: 0.5, 2: 0.5})).norm1() <= 1e-6


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kyfan_residual_shrinks_with_tol(seed):
    rng = np.random.default_rng(seed)
    C = ConvexBody.hull([SparsePoint.from_dense(rng.uniform(0, 1, 4)) for _ in range(3)])
    f = AffineOnGenerators([C.point(rng.dirichlet(np.ones(3))) for _ in range(3)], C)
    for tol in (1e-2, 1e-4, 1e-6):
        assert ky_fan_fixed_point(C, f, tol).norm_residual <= tol


# -- invariant hulls -------------------------------------------------------------------------

def test_hull_constant_map():
    C = ConvexBody.simplex_face([1, 2, 3])
    c = SparsePoint({2: 0.5, 3: 0.5})
    it = invariant_separable_hull(C, Constant(c, C), e(1), 3)
    assert it.sets[1] == [e(1), c]
    assert it.sets[2] == it.sets[1]
    assert it.gaps[1] == 0


def test_hull_identity():
    C = ConvexBody.simplex_face([1, 2])
    it = invariant_separable_hull(C, identity_map(C), e(1), 4)
    assert all(s == [e(1)] for s in it.sets)


def test_hull_shift_orbit():
    C = ConvexBody.simplex_face(range(1, 6))
    it = invariant_separable_hull(C, Shift((1, 5), C), e(1), 6)
    assert set(it.sets[5]) >= {e(i) for i in range(1, 6)}
    assert it.gaps[3] > 0 and it.gaps[4] == 0
    assert it.stabilized_at() == 5
