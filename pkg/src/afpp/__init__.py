"""Approximate fixed points of self-maps of convex sets in sequence spaces."""

from .brouwer import SimplexMap, fixed_point, sperner_search
from .dualpair import (AffineOnGenerators, Composition, Constant, ConvexBody, Functional,
                       SeminormFamily, Shift, SparsePoint, WeightedShift, membership, pair)
from .ell1 import basis_constant, ell1_profile, weak_cauchy_check, weak_cauchy_refute
from .engine import (afp_sequence, approx_fixed_point, dyadic_functionals,
                     invariant_separable_hull, ky_fan_fixed_point)
from .gallery import cone_neighborhood, gallery_instance, list_gallery, verify_cone_coincidence

__all__ = [
    "AffineOnGenerators", "Composition", "Constant", "ConvexBody", "Functional",
    "SeminormFamily", "Shift", "SimplexMap", "SparsePoint", "WeightedShift",
    "afp_sequence", "approx_fixed_point", "basis_constant", "cone_neighborhood",
    "dyadic_functionals", "ell1_profile", "fixed_point", "gallery_instance",
    "invariant_separable_hull", "ky_fan_fixed_point", "list_gallery", "membership",
    "pair", "sperner_search", "verify_cone_coincidence", "weak_cauchy_check",
    "weak_cauchy_refute",
]
