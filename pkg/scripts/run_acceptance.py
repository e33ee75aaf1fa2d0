"""Run the acceptance suite and print one line per criterion.

    python scripts/run_acceptance.py [-k EXPR]
"""

import argparse
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-k", default=None, help="pytest -k expression to select criteria")
    args = parser.parse_args()
    argv = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if args.k:
        argv += ["-k", args.k]
    return int(pytest.main(argv))


if __name__ == "__main__":
    sys.exit(main())
