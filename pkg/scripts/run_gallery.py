"""Run every gallery instance's check and print a one-line verdict per instance."""

import argparse
import time

from afpp.gallery import gallery_instance, list_gallery


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="instances to run (default: all)")
    args = ap.parse_args()
    names = args.names or [entry["name"] for entry in list_gallery()]
    failed = 0
    for name in names:
        t0 = time.perf_counter()
        res = gallery_instance(name).check()
        failed += not res.passed
        print(f"{name:28s} {'ok' if res.passed else 'FAILED':6s} "
              f"{time.perf_counter() - t0:6.2f}s")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
