"""Run the adaptive pipeline over many seeds on single-conflict instances and
summarise success rate, timing and which stages ran.

    python scripts/pipeline_sweep.py --seeds 20 --parts 200 --degree 600 --list-size 30
"""

import argparse
import collections
import json
import time

from transversal.cover import is_independent_transversal, stats
from transversal.generators import GenSpec, generate
from transversal.pipeline import Budgets, run_pipeline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--parts", type=int, default=200)
    ap.add_argument("--degree", type=int, default=600)
    ap.add_argument("--list-size", type=int, default=30)
    ap.add_argument("--epsilon", type=float, help="default: measured min|L|/avg degree - 1")
    ap.add_argument("--strict", action="store_true")
    ap.add_argument("--max-attempts", type=int, default=100)
    a = ap.parse_args()

    found, times, shortfalls, failures = 0, [], collections.Counter(), collections.Counter()
    for seed in range(a.seeds):
        spec = GenSpec("single_conflict", seed, dict(parts=a.parts, degree=a.degree, list_size=a.list_size))
        inst = generate(spec)
        st = stats(inst)
        d = float(st.max_avg_colour_degree)
        eps = a.epsilon if a.epsilon is not None else st.min_list_size / d - 1
        t = time.perf_counter()
        out = run_pipeline(inst, eps, st.max_colour_multiplicity / d, seed=seed,
                           budgets=Budgets(max_attempts=a.max_attempts), strict=a.strict)
        times.append(time.perf_counter() - t)
        ok = out.status == "found" and is_independent_transversal(inst, out.colouring)
        found += ok
        if not ok:
            failures[out.stage] += 1
        for s in out.report.shortfalls:
            shortfalls[s.split(":")[0].split(" (")[0]] += 1
        stages = [r.name for r in out.report.stages]
        print(json.dumps({"seed": seed, "status": out.status, "time": round(times[-1], 3),
                          "nibble_rounds": sum(n.startswith("nibble") for n in stages)}))
    print(json.dumps({"seeds": a.seeds, "found": found, "max_time": round(max(times), 3),
                      "mean_time": round(sum(times) / len(times), 3), "failed_stages": dict(failures),
                      "shortfalls": dict(shortfalls)}, indent=1))


if __name__ == "__main__":
    main()
