"""Regenerate the synthetic exam-score and program tables shipped with the package."""

import argparse
from pathlib import Path

import fairselect
from fairselect.ingest import write_fixture


def main() -> None:
    default_dir = Path(fairselect.__file__).parent / "data"
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default=str(default_dir))
    parser.add_argument("--seed", type=int, default=2009)
    parser.add_argument("--n", type=int, default=5000)
    args = parser.parse_args()
    for path in write_fixture(args.dir, seed=args.seed, n=args.n):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
