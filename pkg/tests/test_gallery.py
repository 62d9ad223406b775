from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afpp.dualpair import SparsePoint
from afpp.errors import UnknownInstance
from afpp.gallery import (cone_neighborhood, gallery_instance, list_gallery,
                          verify_cone_coincidence)

REQUIRED = ["l1-simplex-shift-c0dual", "canonical-basis-weak", "schur-demo", "compact-kyfan"]


def test_zero_center():
    nb = cone_neighborhood(SparsePoint.zero(), 1)
    assert nb.F == (1,)
    assert nb.u_bound == Fraction(1, 4) and nb.v_bound == Fraction(1, 4)


def test_basis_center():
    nb = cone_neighborhood(SparsePoint.basis(1), 0.4)
    assert nb.F == (1,)
    assert float(nb.u_bound) == pytest.approx(0.1) and float(nb.v_bound) == pytest.approx(0.1)


def test_geometric_center_head():
    x = SparsePoint({i: 2.0 ** -i for i in range(1, 21)})
    nb = cone_neighborhood(x, 0.2)
    assert nb.F == (1, 2, 3, 4, 5)
    total = sum(Fraction(v) for _, v in x.items())
    assert sum(Fraction(x[i]) for i in nb.F) > total - Fraction(0.2) / 4


def test_ties_broken_by_index():
    x = SparsePoint({3: 0.5, 1: 0.5, 2: 0.5})
    nb = cone_neighborhood(x, 0.1)
    assert nb.F == (1, 2, 3)
    nb = cone_neighborhood(x, 4.1)
    assert nb.F == (1,)


def test_center_must_be_nonnegative():
    with pytest.raises(ValueError):
        cone_neighborhood(SparsePoint({1: -1}), 1)


def test_center_is_conforming():
    x = SparsePoint({1: 0.3, 4: 0.1})
    nb = cone_neighborhood(x, 0.5)
    assert nb.contains(x)
    assert nb.partial_bounds(x)[:2] == (0, 0)


def test_membership_rejects_outside_points():
    nb = cone_neighborhood(SparsePoint.basis(1), 0.4)
    assert not nb.contains(SparsePoint({1: 1.2}))
    assert not nb.contains(SparsePoint({1: 1, 7: 0.2}))
    assert not nb.contains(SparsePoint({1: 1, 2: -0.01}))


def test_verify_zero_center():
    ver = verify_cone_coincidence(cone_neighborhood(SparsePoint.zero(), 1), 1000, seed=0)
    assert ver.passed and not ver.starved
    assert ver.worst < 0.5


def test_verify_basis_center():
    ver = verify_cone_coincidence(cone_neighborhood(SparsePoint.basis(1), 0.4), 1000, seed=1)
    assert ver.passed and ver.worst < 0.4


def test_verify_deterministic():
    nb = cone_neighborhood(SparsePoint({1: 0.5, 2: 0.25}), 0.1)
    assert verify_cone_coincidence(nb, 200, seed=5) == verify_cone_coincidence(nb, 200, seed=5)


def test_starvation_is_reported():
    nb = cone_neighborhood(SparsePoint.basis(1), 0.4)
    ver = verify_cone_coincidence(nb, 10, seed=0, max_draws=0)
    assert ver.starved and ver.conforming == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 0.1, 0.01]))
def test_partial_bounds_random_centers(seed, eps):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 31))
    idx = rng.choice(np.arange(1, 61), k, replace=False)
    x = SparsePoint({int(i): float(v) for i, v in zip(idx, rng.exponential(1, k))})
    nb = cone_neighborhood(x, eps)
    ver = verify_cone_coincidence(nb, 100, seed=seed)
    assert ver.partials_ok and ver.passed
    assert ver.worst < eps
    h, t, m = ver.worst_partials
    assert h < eps / 4 and t < eps / 4 and m < eps / 2


# -- catalog -------------------------------------------------------------------------

def test_catalog_names():
    names = [g["name"] for g in list_gallery()]
    for n in REQUIRED:
        assert n in names
    for n in names:
        assert gallery_instance(n).name == n


def test_unknown_instance():
    with pytest.raises(UnknownInstance):
        gallery_instance("no-such-thing")


@pytest.mark.parametrize("name", REQUIRED)
def test_instance_expectation_holds(name):
    result = gallery_instance(name).check()
    assert result.passed, result.details


def test_kyfan_instance_residual():
    d = gallery_instance("compact-kyfan").check().details
    assert d["residual"] < 1e-6


def test_canonical_instance_refuter():
    d = gallery_instance("canonical-basis-weak").check().details
    assert d["refuter_oscillation"] == 2


def test_instance_maps_are_self_maps():
    for name in REQUIRED:
        inst = gallery_instance(name)
        if inst.map is not None:
            assert inst.map.check_self_map()
