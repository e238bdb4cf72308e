"""How large n must be before kappa <= 1/16 leaves room for a useful deviation level.

For each n the engineered instance maximizes d2 + n b2 subject to kappa in the
target window; v = 2 / sqrt(d2 + n b2) must stay below 1/4.
"""

import argparse

import numpy as np

from scordant.datagen import UnreachableTargetError, engineer_kappa


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--target", type=float, default=0.05)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--rows", type=int, default=2)
    ap.add_argument("--sizes", type=float, nargs="+", default=[1e3, 1e4, 1e5, 1e6, 1e7])
    args = ap.parse_args()

    print(f"{'n':>10}{'lam':>12}{'kappa':>10}{'d2+n*b2':>12}{'v':>8}")
    for n in args.sizes:
        try:
            _, lam, d = engineer_kappa(args.target, int(n), args.p, distinct_rows=args.rows)
        except UnreachableTargetError:
            print(f"{int(n):>10}{'unreachable':>12}")
            continue
        v = 2.0 / np.sqrt(d.effective_size)
        print(f"{int(n):>10}{lam:>12.4g}{d.kappa:>10.4f}{d.effective_size:>12.4g}{v:>8.3f}")


if __name__ == "__main__":
    main()
