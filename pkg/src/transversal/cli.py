"""Command-line front end.

Exit status: 0 success, 1 domain failure (no transversal found, budget or
attempts exhausted, invalid instance or colouring), 2 usage or format error.
Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from .cover import (
    CoverInstance,
    InstanceError,
    PartialColouring,
    conflicting_pairs,
    stats,
    validate,
)

log = logging.getLogger("transversal")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(2)


def _emit_error(kind: str, message: str, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"{path}: {e}") from e


def _load_instance(path: str) -> CoverInstance:
    try:
        return CoverInstance.from_dict(_read_json(path))
    except InstanceError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{path}: malformed instance ({e})") from e


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _colouring_json(col: PartialColouring) -> str:
    return json.dumps([[v, s] for v, s in sorted(col.assignment.items())]) + "\n"


def _strict_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true")
    g.add_argument("--adaptive", dest="strict", action="store_false")
    p.set_defaults(strict=False)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="transversal", description="Independent transversals in cover graphs.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("validate")
    p.add_argument("instance")

    p = sub.add_parser("stats")
    p.add_argument("instance")

    p = sub.add_parser("generate")
    p.add_argument("--family", required=True, choices=["random_cover", "matching_cover", "list_cover", "single_conflict", "egl"])
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--parts", type=int)
    p.add_argument("--list-size", type=int)
    p.add_argument("--edge-prob", type=float, default=0.1)
    p.add_argument("--base-density", type=float, default=1.0)
    p.add_argument("--cap", type=int)
    p.add_argument("--pair-prob", type=float, default=0.5)
    p.add_argument("--degree", type=int, help="base degree for single_conflict (regular multigraph)")
    p.add_argument("--palette", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--pair-edge-prob", type=float, default=1.0)
    p.add_argument("--out")

    p = sub.add_parser("reduce")
    p.add_argument("instance")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--gamma", type=float, help="defaults to mu / (max average colour degree)")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--max-attempts", type=int, default=100)
    p.add_argument("--trace")
    p.add_argument("--out")
    _strict_flags(p)

    p = sub.add_parser("nibble")
    p.add_argument("instance")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--p", type=float, help="defaults to 1/log d")
    p.add_argument("--d", type=float, help="defaults to the max average colour degree")
    p.add_argument("--Lambda", type=float, help="defaults to the min list size")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="per-trial CSV")
    _strict_flags(p)

    p = sub.add_parser("solve")
    p.add_argument("instance")
    p.add_argument("--engine", choices=["exact", "lll", "pipeline"], default="exact")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-nodes", type=int, default=10_000_000)
    p.add_argument("--max-attempts", type=int, default=100)
    p.add_argument("--max-resamples", type=int, default=1_000_000)
    p.add_argument("--report")
    p.add_argument("--out")
    _strict_flags(p)

    p = sub.add_parser("verify")
    p.add_argument("instance")
    p.add_argument("colouring")
    return ap


def _cmd_validate(a) -> int:
    obj = _read_json(a.instance)
    try:
        inst = CoverInstance.from_dict(obj)
    except InstanceError as e:
        _write(_dump({"valid": False, "violations": [str(v) for v in e.violations]}), None)
        return 1
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{a.instance}: malformed instance ({e})") from e
    bad = validate(inst)
    _write(_dump({"valid": not bad, "violations": [str(v) for v in bad]}), None)
    return 1 if bad else 0


def _cmd_stats(a) -> int:
    _write(_dump(stats(_load_instance(a.instance)).to_dict()), None)
    return 0


def _cmd_generate(a) -> int:
    from .generators import GenSpec, generate

    need = {"random_cover": ["parts", "list_size"], "matching_cover": ["parts", "list_size"],
            "list_cover": ["parts", "list_size"],
            "single_conflict": ["parts", "degree", "list_size"], "egl": ["n", "k"]}[a.family]
    missing = [k for k in need if getattr(a, k) is None]
    if missing:
        raise UsageError(f"family {a.family} needs --{', --'.join(m.replace('_', '-') for m in missing)}")
    keys = ("parts", "list_size", "edge_prob", "pair_prob", "base_density", "cap", "degree", "palette", "n", "k",
            "pair_edge_prob")
    params = {k: getattr(a, k) for k in keys if getattr(a, k) is not None}
    try:
        inst = generate(GenSpec(a.family, a.seed, params))
    except ValueError as e:
        raise UsageError(str(e)) from e
    _write(inst.to_json(), a.out)
    return 0


def _default_gamma(inst: CoverInstance) -> float:
    st = stats(inst)
    d = float(st.max_avg_colour_degree)
    return st.max_colour_multiplicity / d if d else 1.0


def _cmd_reduce(a) -> int:
    from .phase1 import reduce

    inst = _load_instance(a.instance)
    gamma = a.gamma if a.gamma is not None else _default_gamma(inst)
    try:
        out = reduce(inst, a.epsilon, gamma, seed=a.seed, max_attempts=a.max_attempts, strict=a.strict)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if a.trace:
        Path(a.trace).write_text(json.dumps(out.trace.to_dict(), indent=1, sort_keys=True) + "\n")
    if out.instance is None:
        _emit_error("attempts_exhausted", "halving exhausted its attempts")
        return 1
    _write(out.instance.to_json(), a.out)
    if a.out:
        _write(_dump({"status": out.status, "stats": stats(out.instance).to_dict()}), None)
    return 0


def _cmd_nibble(a) -> int:
    from .nibble import NibbleParams, monte_carlo_check

    inst = _load_instance(a.instance)
    st = stats(inst)
    d = a.d if a.d is not None else float(st.max_avg_colour_degree)
    p = a.p if a.p is not None else (1 / math.log(d) if d > math.e else None)
    if p is None:
        raise UsageError("default p = 1/log d needs d > e; pass --p")
    Lam = a.Lambda if a.Lambda is not None else float(st.min_list_size)
    try:
        params = NibbleParams(p, a.epsilon, d, Lam, seed=a.seed, strict=a.strict)
        rep = monte_carlo_check(inst, params, a.trials, keep_trials=a.out is not None, jobs=a.jobs)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if a.out:
        pt = rep.per_trial
        with open(a.out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["trial", "part", "useable_cols", "expected_useable", "bad_events", "omega_star"])
            for t in range(rep.trials):
                for v in range(inst.num_parts):
                    w.writerow([t, v, int(pt["useable"][t, v]), repr(float(rep.useable_analytic[v])),
                                int(pt["bad_events"][t, v]), int(bool(pt["omega"][t, v]))])
    summary = {
        "trials": rep.trials,
        "p": p, "d": d, "Lambda": Lam, "epsilon": a.epsilon,
        "useable_mean": rep.useable_mean.tolist(),
        "useable_se": rep.useable_se.tolist(),
        "useable_analytic": rep.useable_analytic.tolist(),
        "any_event_freq": rep.any_event_freq,
    }
    _write(_dump(summary), None)
    return 0


def _cmd_solve(a) -> int:
    inst = _load_instance(a.instance)
    if a.engine != "exact" and a.seed is None:
        raise UsageError(f"--seed is required for engine {a.engine}")
    if a.engine == "exact":
        from .oracle import SearchBudget, find_transversal_exact

        res = find_transversal_exact(inst, SearchBudget(a.max_nodes))
        if res.status != "found":
            _emit_error(res.status, f"exact search: {res.status}", nodes=res.nodes)
            return 1
        col = res.colouring
    elif a.engine == "lll":
        from .finisher import FinisherParams, PreconditionError, finish

        try:
            res = finish(inst, FinisherParams(a.max_resamples, a.seed, enforce_precondition=a.strict))
        except PreconditionError as e:
            _emit_error("precondition", str(e))
            return 1
        if res.status != "found":
            _emit_error(res.status, "resampling budget exhausted", resamples=res.resamples)
            return 1
        col = res.colouring
    else:
        from .pipeline import Budgets, run_pipeline

        st = stats(inst)
        d = float(st.max_avg_colour_degree)
        eps = a.epsilon if a.epsilon is not None else (st.min_list_size / d - 1 if d else 1.0)
        gamma = a.gamma if a.gamma is not None else _default_gamma(inst)
        try:
            out = run_pipeline(inst, eps, gamma, a.seed, Budgets(a.max_attempts, a.max_resamples), strict=a.strict)
        except ValueError as e:
            raise UsageError(str(e)) from e
        if a.report:
            Path(a.report).write_text(out.report.to_json())
        if out.status != "found":
            _emit_error("failed", f"pipeline failed at stage {out.stage}", stage=out.stage)
            return 1
        col = out.colouring
    _write(_colouring_json(col), a.out)
    return 0


def _cmd_verify(a) -> int:
    inst = _load_instance(a.instance)
    raw = _read_json(a.colouring)
    try:
        col = PartialColouring.from_refs(raw)
        col.chosen(inst)
    except (TypeError, ValueError) as e:
        raise UsageError(f"{a.colouring}: {e}") from e
    edges = [[list(inst.ref(int(x))), list(inst.ref(int(y)))] for x, y in conflicting_pairs(inst, col)]
    missing = [v for v in range(inst.num_parts) if v not in col]
    ok = not edges and not missing
    _write(_dump({"independent_transversal": ok, "conflicts": edges, "uncoloured_parts": missing}), None)
    return 0 if ok else 1


_COMMANDS = {
    "validate": _cmd_validate,
    "stats": _cmd_stats,
    "generate": _cmd_generate,
    "reduce": _cmd_reduce,
    "nibble": _cmd_nibble,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    level = os.environ.get("TRANSVERSAL_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except UsageError as e:
        _emit_error("usage", str(e))
        return 2
    except InstanceError as e:
        _emit_error("invalid_instance", str(e), violations=[str(v) for v in e.violations])
        return 2


if __name__ == "__main__":
    sys.exit(main())
