"""Compare the closed-form expected number of useable colours per part with
Monte Carlo estimates on matching covers (colour multiplicity 1).

    python scripts/nibble_mc.py --d 50 100 200 --trials 10000 --seed 1
"""

import argparse
import json
import math

import numpy as np

from transversal.cover import stats
from transversal.generators import gen_matching_cover
from transversal.nibble import NibbleParams, expected_useable, monte_carlo_check


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=float, nargs="+", default=[50, 100, 200])
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--fill", type=float, default=0.85, help="target average degree as a fraction of d")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, required=True)
    a = ap.parse_args()

    for i, d in enumerate(a.d):
        parts, lam = int(d) + 10, math.ceil((1 + a.epsilon) * d)
        inst = gen_matching_cover(parts, lam, a.fill * d / (parts - 1), 1.0, seed=a.seed + i)
        params = NibbleParams(1 / math.log(d), a.epsilon, d, float(lam), seed=a.seed + i)
        closed = expected_useable(inst, params.p, params.Lambda)
        rep = monte_carlo_check(inst, params, a.trials, track="useable")
        z = (rep.total_mean - closed.sum()) / rep.total_se
        print(json.dumps({
            "d": d, "parts": parts, "Lambda": lam, "p": round(params.p, 6),
            "measured_avg_degree": float(stats(inst).max_avg_colour_degree),
            "closed_min_per_part": float(closed.min()),
            "lower_bound": (1 - params.p / (1 + a.epsilon)) * lam,
            "total_closed": float(closed.sum()), "total_mc": rep.total_mean, "total_z": round(float(z), 3),
            "per_part_within_3se": float(np.mean(np.abs(rep.useable_mean - closed) <= 3 * rep.useable_se)),
        }))


if __name__ == "__main__":
    main()
