"""Fraction of LIL replicates inside the N = 1 band as a function of the
first scale k0 of the running extremum.

The hitting and sup statistics drift to opposite sides of their bands as k0
grows, which this scan makes visible.

    python scripts/lil_k0_scan.py --seeds 11 12 13
"""

import argparse

from escapelab.levy_lil import BrownianConfig, lil_hitting_experiment, lil_sup_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--K", type=int, default=16)
    parser.add_argument("--replicates", type=int, default=50)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0])
    parser.add_argument("--k0", type=int, nargs="+", default=[8, 10, 12, 14, 16])
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    print("seed  kind     " + " ".join(f"k0={k:<4d}" for k in args.k0))
    for seed in args.seeds:
        for kind, fn, d in (("hitting", lil_hitting_experiment, 3), ("sup", lil_sup_experiment, 1)):
            cfg = BrownianConfig(d=d, seed=seed)
            fr = [fn(cfg, K=args.K, replicates=args.replicates, Ns=(1,), k0=k, workers=args.workers)
                  .in_band_fraction(1) for k in args.k0]
            print(f"{seed:<5d} {kind:<8s} " + " ".join(f"{f:<7.2f}" for f in fr))


if __name__ == "__main__":
    main()
