"""Print basis-constant profiles for two sequences side by side.

The unit vector basis keeps M = 1 under the full l1 norm at every horizon,
while under finitely many sign-pattern functionals its constants fall like 1/n.
"""

import argparse

from afpp.dualpair import Functional, PeriodicSigns, SeminormFamily, SparsePoint
from afpp.ell1 import ell1_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32, 64, 128])
    args = ap.parse_args()
    H = args.horizons[-1]
    basis = [SparsePoint.basis(i) for i in range(1, H + 1)]

    strong = ell1_profile(basis, SeminormFamily.ell1_prefix(H), args.horizons, levels=[H])
    weak = ell1_profile(basis, SeminormFamily.functional_sup(
        [[Functional.all_ones()], [Functional.alternating()],
         [Functional(tail=PeriodicSigns((1, 1, -1, -1)))]]), args.horizons)
    print("l1 prefix norm (level = horizon)")
    print(strong.csv())
    print("sign-pattern functionals")
    print(weak.csv())


if __name__ == "__main__":
    main()
