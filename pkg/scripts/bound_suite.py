"""Randomized deterministic-inequality suite, optionally with a deliberately broken remainder.

    python scripts/bound_suite.py --instances 1000
    python scripts/bound_suite.py --instances 100 --fault phi_plus
"""

import argparse
import json

from scordant.suite import FAULT_FACTORS, faulty_remainders, run_bound_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--instances", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fault", choices=sorted(FAULT_FACTORS), default=None)
    args = ap.parse_args()

    kwargs = {"remainders": faulty_remainders(args.fault)} if args.fault else {}
    rep = run_bound_suite(args.instances, seed=args.seed, **kwargs)
    print(f"{rep.n_instances} instances, {rep.n_tuples} tuples, {rep.wall_time:.1f} s")
    print(f"{'check':<22}{'count':>8}{'fail':>8}{'worst margin':>16}")
    for r in rep.records():
        print(f"{r['name']:<22}{r['count']:>8}{r['failures']:>8}{r['worst_relative_margin']:>16.3e}")
    if rep.counterexamples:
        cex = rep.counterexamples[0]
        print("first counterexample:", json.dumps({k: cex[k] for k in ("name", "lhs", "rhs")}))
    return 0 if rep.passed else 2


if __name__ == "__main__":
    raise SystemExit(main())
