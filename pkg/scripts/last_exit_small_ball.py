"""Lower tail of the d = 3 last exit time L(1) at large sample sizes.

Simulates L(1) for ``--count`` motions and reports the slope against 1/r of
log P(L(1) <= r) + 1/(2r) - (2 - d/2) log r, from the simulation and from
the exact law L(1) = 1/Z^2.  Both should be near 0 (|slope| <= 0.05).

    python scripts/last_exit_small_ball.py --count 1000000 --workers 8
"""

import argparse
import json
import time

import numpy as np

from escapelab.levy_lil import BrownianConfig, brownian_last_exit, last_exit_residual_slope
from escapelab.rng import derive_seed, generator


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=10**6)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dt", type=float, default=4e-2)
    parser.add_argument("--refine", type=int, default=5)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    t0 = time.perf_counter()
    cfg = BrownianConfig(d=3, N=args.count, dt=args.dt, seed=args.seed, refine=args.refine)
    hs = brownian_last_exit(cfg, [1.0], workers=args.workers)
    L = hs.L[~hs.flagged, 0]
    z = generator(derive_seed(args.seed, ["exact-last-exit"])).standard_normal(args.count)
    out = {
        "count": int(L.size),
        "flagged": int(hs.flagged.sum()),
        "slope_simulated": last_exit_residual_slope(L),
        "slope_exact_law": last_exit_residual_slope(1.0 / z**2),
        "seconds": round(time.perf_counter() - t0, 1),
    }
    out["passed"] = bool(abs(out["slope_simulated"]) <= 0.05)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
