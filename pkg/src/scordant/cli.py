"""Command-line experiment harness.

Every subcommand writes a JSON report (schema 1) with the echoed
configuration, per-check records ``{name, premise_ok, lhs, rhs, pass}``,
replicate statistics, seeds and wall time; ``--csv`` adds a plot-ready
table. A record passes when ``lhs <= rhs``, with any Monte-Carlo cushion
already folded into ``rhs``.

Exit codes: 0 all checks pass, 1 usage error, 2 a bound is violated,
3 a premise is not met.

Default replicate counts and their timings on one core:
verify-bounds about 10 s, ridge-experiment under 10 s, lasso-experiment
under 10 s (sign consistency and efficiency) and about 30 s for the phase diagram,
concentration under 5 s per tail.
"""

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import presets
from .concentration import (DEFAULT_DRAWS, DEFAULT_U_GRID, QuadFormInstance, bernstein_coin_check,
                            centered_bernoulli_sampler, misspecified_tail_check,
                            rademacher_sampler, tail_check, wellspecified_tail_check)
from .lasso import consistency_diagnostics, efficiency_check, sign_consistency_check, sign_recovery_grid
from .logistic import load_problem
from .replicates import mc_cushion
from .ridge import (diagnostics, lambda_grid, misspecified_risk_check, quadratic_approximation_run,
                    risk_expansion_check)
from .suite import faulty_remainders, run_bound_suite, two_point_refusal

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_PREMISE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _positive_int(text):
    try:
        value = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1 or value != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _dims(text):
    try:
        n, p = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'n,p', got {text!r}") from None
    if n < 2 or p < 1:
        raise argparse.ArgumentTypeError("need n >= 2 and p >= 1")
    return n, p


def record(name, lhs, rhs, passed=None, premise_ok=True, **extra):
    lhs, rhs = float(lhs), float(rhs)
    out = {"name": name, "premise_ok": bool(premise_ok), "lhs": lhs, "rhs": rhs,
           "pass": bool(lhs <= rhs if passed is None else passed)}
    out.update(extra)
    return out


def exit_code(records):
    if any(not r["premise_ok"] for r in records):
        return EXIT_PREMISE
    if any(not r["pass"] for r in records):
        return EXIT_VIOLATION
    return EXIT_OK


def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    return obj


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


# ----------------------------------------------------------------------
# subcommands; each returns (records, statistics, csv_text or None)
# ----------------------------------------------------------------------


def cmd_verify_bounds(args):
    remainders = faulty_remainders(args.inject_fault) if args.inject_fault else None
    kwargs = {} if remainders is None else {"remainders": remainders}
    rep = run_bound_suite(args.instances, seed=args.seed, dims=args.dims,
                          tuples_per_instance=args.tuples, newton=not args.no_newton, **kwargs)
    records = rep.records()
    ratio, refused = two_point_refusal()
    records.append(record("newton_premise_refusal", 0.5, ratio, passed=refused,
                          note="two-point instance; pass means the certificate was refused"))
    stats = {"n_instances": rep.n_instances, "n_tuples": rep.n_tuples,
             "counterexamples": rep.counterexamples}
    rows = [[r["name"], r["count"], r["failures"], r["worst_relative_margin"]] for r in rep.records()]
    return records, stats, _csv_text(["name", "count", "failures", "worst_relative_margin"], rows)


def _ridge_csv(problem, lams=None):
    lams = lambda_grid(problem.radius_R) if lams is None else lams
    Q = problem.weighted_gram()
    header = ["lam", "d1", "d2", "b1", "b2", "kappa", "kappa_var", "kappa_bias", "effective_size"]
    rows = []
    for lam in lams:
        d = diagnostics(problem, lam, Q=Q)
        rows.append([float(lam), d.d1, d.d2, d.b1, d.b2, d.kappa, d.kappa_var, d.kappa_bias,
                     d.effective_size])
    return _csv_text(header, rows)


def cmd_ridge(args):
    theorem = args.theorem
    if theorem == "1":
        problem = load_problem(args.problem) if args.problem else \
            presets.misspecified_problem(n=args.n or 200, p=args.p or 5, seed=args.seed)
        reps = args.reps or 500
        chk = misspecified_risk_check(problem, args.delta, reps, args.seed)
        records = [record("misspecified_risk_violation_rate", chk.violation_rate, chk.allowed)]
        stats = {"lam": chk.lam, "delta": chk.delta, "n_reps": reps, "bound_rhs": chk.bound_rhs,
                 "violation_rate": chk.violation_rate, "candidates": chk.candidates}
        return records, stats, _ridge_csv(problem)

    if theorem == "prop3":
        if args.problem:
            if args.lam is None:
                raise UsageError("--lam is required with --problem")
            problem, lam = load_problem(args.problem), args.lam
        else:
            setup = presets.quadratic_setup(n=args.n or 2000, p=args.p or 10, seed=args.seed)
            problem, lam = setup.problem, setup.lam if args.lam is None else args.lam
        reps = args.reps or 500
        run = quadratic_approximation_run(problem, lam, reps, args.seed)
        records = [record("quadratic_approximation_max_ratio", run.max_ratio, 1.0,
                          passed=run.passed, premise_ok=run.premise_held > 0)]
        stats = {"lam": lam, "n_reps": reps, "premise_held": run.premise_held,
                 "holds": run.holds, "slack": run.slack}
        return records, stats, _ridge_csv(problem, [lam])

    # risk expansion and criterion residual share the replicate loop
    if args.problem:
        if args.lam is None:
            raise UsageError("--lam is required with --problem")
        problem, lam = load_problem(args.problem), args.lam
    else:
        problem, lam, _ = presets.kappa_setup(target=args.target_kappa,
                                              n=args.n or presets.KAPPA_N,
                                              p=args.p or presets.KAPPA_P, seed=args.seed)
        lam = lam if args.lam is None else args.lam
    diag = diagnostics(problem, lam)
    v = args.v if args.v is not None else float(np.sqrt(4.0 / max(diag.effective_size, 1e-300)))
    reps = args.reps or 1000
    chk = risk_expansion_check(problem, lam, v, reps, args.seed)
    if theorem == "2":
        rec = record("risk_expansion_holding_freq", chk.required, chk.expansion_freq,
                     premise_ok=chk.premise_ok)
    else:
        rec = record("criterion_residual_holding_freq", chk.required, chk.residual_freq,
                     premise_ok=chk.premise_ok)
    stats = chk.summary()
    stats["n_reps"] = reps
    stats["diagnostics"] = diag.to_dict()
    return [rec], stats, _ridge_csv(problem)


def _lasso_problem(args):
    if args.problem:
        return load_problem(args.problem)
    if args.design == "orthogonal":
        return presets.orthogonal_lasso_problem(n=args.n or presets.ORTHOGONAL_N, p=args.p or 10,
                                                support_size=args.support, seed=args.seed,
                                                distinct_rows=args.distinct_rows
                                                or presets.ORTHOGONAL_ROWS)
    return presets.eta_problem(n=args.n or 2000, p=args.p or 10, support_size=args.support,
                               eta=args.eta, seed=args.seed, distinct_rows=args.distinct_rows)


def cmd_lasso(args):
    problem = _lasso_problem(args)
    diag = consistency_diagnostics(problem)
    if diag.degenerate:
        return [record("support", 0.0, 0.0, premise_ok=False)], {"note": "w0 has empty support"}, None

    if args.phase_diagram:
        sizes = args.sizes or [1e8, 1e9, 1e10, 1e11]
        fractions = args.lam_fractions or [0.25, 0.5, 1.0]
        lams = [f * diag.sign_cap for f in fractions]
        reps = args.reps or 200
        rows = sign_recovery_grid(problem, [int(s) for s in sizes], lams, reps, args.seed)
        records = []
        for r in rows:
            allowed = r["bound"] + mc_cushion(min(r["bound"], 1.0), reps)
            records.append(record(f"sign_error[n={r['n']},lam={r['lam']:.6g}]",
                                  1.0 - r["recovery_rate"], allowed, premise_ok=r["premise_ok"]))
        text = _csv_text(["n", "lam", "recovery_rate", "bound"],
                         [[r["n"], r["lam"], r["recovery_rate"], r["bound"]] for r in rows])
        return records, {"n_reps": reps, "diagnostics": diag.to_dict(), "grid": rows}, text

    if args.theorem == "4":
        lam = args.lam if args.lam is not None else (args.lam_fraction or 0.5) * diag.sign_cap
        reps = args.reps or 1000
        chk = sign_consistency_check(problem, lam, reps, args.seed, diag=diag)
        rec = record("sign_error_rate", chk.sign_error_rate, chk.allowed, premise_ok=chk.premise_ok)
        stats = chk.summary()
    else:
        lam = args.lam if args.lam is not None else (args.lam_fraction or 0.8) * diag.efficiency_cap
        reps = args.reps or 1000
        chk = efficiency_check(problem, lam, reps, args.seed, diag=diag)
        rec = record("efficiency_holding_freq", chk.required, chk.holding_freq,
                     premise_ok=chk.premise_ok)
        stats = chk.summary()
    stats["n_reps"] = reps
    stats["n"] = problem.n
    stats["diagnostics"] = diag.to_dict()
    return [rec], stats, None


def cmd_concentration(args):
    u_grid = args.u_grid or list(DEFAULT_U_GRID)
    draws = args.draws
    if args.which == "prop4":
        instance, prob = presets.prop4_instance(n=args.n or 50, p=args.p or 5, seed=args.seed)
        sampler = centered_bernoulli_sampler(prob) if args.noise == "bernoulli" \
            else rademacher_sampler(instance.Y.shape[0])
        if args.noise == "rademacher":
            instance = QuadFormInstance(instance.Y, sampler.sigma)
        chk = tail_check(instance, sampler, u_grid, draws, args.seed)
    elif args.which == "eq19":
        problem = load_problem(args.problem) if args.problem else \
            presets.misspecified_problem(n=args.n or 200, p=args.p or 5, seed=args.seed)
        chk = misspecified_tail_check(problem, args.lam, u_grid, draws, args.seed)
    elif args.which == "eq20":
        problem = load_problem(args.problem) if args.problem else \
            presets.wellspecified_problem(n=args.n or 500, p=args.p or 5, seed=args.seed)
        chk = wellspecified_tail_check(problem, args.lam, u_grid, draws, args.seed)
    else:
        chk = bernstein_coin_check(n_terms=args.n or 10_000, u_grid=u_grid, n_draws=draws,
                                   seed=args.seed)
    records = [record(f"tail[u={r.u:g}]", r.empirical, r.bound + r.cushion) for r in chk.rows]
    if chk.mean_target is not None:
        records.append(record("mean", abs(chk.mean - chk.mean_target), 4.0 * chk.mean_se))
    return records, chk.summary(), chk.to_csv()


# ----------------------------------------------------------------------
# parser and entry point
# ----------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="scordant", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="JSON report path (default: stdout)")
        p.add_argument("--csv", help="CSV output path")

    p = sub.add_parser("verify-bounds", help="randomized deterministic-inequality suite")
    common(p)
    p.add_argument("--instances", type=_positive_int, default=1000)
    p.add_argument("--dims", type=_dims, default=None, help="fix instance size as 'n,p'")
    p.add_argument("--tuples", type=_positive_int, default=10, help="evaluation tuples per instance")
    p.add_argument("--no-newton", action="store_true", help="skip the Newton certificate checks")
    p.add_argument("--inject-fault", choices=("phi_plus", "phi_minus", "psi"), default=None,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("ridge-experiment", help="ridge-penalized logistic regression checks")
    common(p)
    p.add_argument("--theorem", choices=("1", "2", "3", "prop3"), required=True)
    p.add_argument("--reps", type=_positive_int, default=None)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--v", type=float, default=None, help="deviation level (default: v^2 (d2+n b2) = 4)")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--target-kappa", type=float, default=presets.KAPPA_TARGET)
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--p", type=_positive_int, default=None)
    p.add_argument("--problem", help="problem JSON instead of the default instance")
    p.set_defaults(func=cmd_ridge)

    p = sub.add_parser("lasso-experiment", help="l1-penalized logistic regression checks")
    common(p)
    p.add_argument("--theorem", choices=("4", "5"), default="4")
    p.add_argument("--reps", type=_positive_int, default=None)
    p.add_argument("--design", choices=("correlated", "orthogonal"), default="correlated")
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--p", type=_positive_int, default=None)
    p.add_argument("--support", type=_positive_int, default=3)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--distinct-rows", type=_positive_int, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--lam-fraction", type=float, default=None, help="lam as a fraction of its cap")
    p.add_argument("--phase-diagram", action="store_true")
    p.add_argument("--sizes", type=_float_list, default=None)
    p.add_argument("--lam-fractions", type=_float_list, default=None)
    p.add_argument("--problem", help="problem JSON instead of the default instance")
    p.set_defaults(func=cmd_lasso)

    p = sub.add_parser("concentration", help="tail-bound Monte-Carlo checks")
    common(p)
    p.add_argument("--which", choices=("prop4", "eq19", "eq20", "bernstein"), required=True)
    p.add_argument("--draws", type=_positive_int, default=DEFAULT_DRAWS)
    p.add_argument("--u-grid", type=_float_list, default=None)
    p.add_argument("--noise", choices=("bernoulli", "rademacher"), default="bernoulli")
    p.add_argument("--lam", type=float, default=0.1)
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--p", type=_positive_int, default=None)
    p.add_argument("--problem", help="problem JSON instead of the default instance")
    p.set_defaults(func=cmd_concentration)
    return parser


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "csv")}


def run(argv=None):
    """Parse ``argv``, run the subcommand and return ``(exit_code, report)``."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        records, stats, csv_text = args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        sys.stderr.write(f"scordant: error: {exc}\n")
        return EXIT_USAGE, None
    report = {"schema": SCHEMA, "command": args.command, "config": _config(args),
              "seeds": {"seed": args.seed}, "records": records, "statistics": stats,
              "wall_time": time.perf_counter() - start}
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and csv_text is not None:
        with open(args.csv, "w", newline="") as fh:
            fh.write(csv_text)
    return exit_code(records), report


def main(argv=None):
    try:
        code, _ = run(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code
    return code


if __name__ == "__main__":
    sys.exit(main())
