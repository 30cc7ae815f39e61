"""Support recovery of the word graph along a descending penalty path.

Fits a warm-started glasso path on one simulated data set and prints edge
count, F1 against the true word-precision support and the KKT certificate at
each penalty, marking the two theoretical values.

    python3 scripts/penalty_sweep.py --n-eff-t 4 --points 15
"""

import argparse
import sys

import numpy as np

from kronprec import (
    FactorSpec,
    glasso_path,
    make_factor,
    precision_support,
    residualize,
    sample_matrix_normal,
    support_f1,
    theoretical_penalties,
    to_correlation,
    word_sample_cov,
)
from kronprec.glasso import path_sparsity_violations
from kronprec.simulate import default_labels


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-w", type=int, default=93)
    p.add_argument("--n-t", type=int, default=19)
    p.add_argument("--n-s", type=int, default=20)
    p.add_argument("--n-r", type=int, default=4)
    p.add_argument("--n-eff-t", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--lambda-min", type=float, default=0.01)
    p.add_argument("--lambda-max", type=float, default=0.4)
    args = p.parse_args(argv)

    words, times = default_labels(args.n_w, args.n_t)
    A = make_factor(FactorSpec("ar1", args.n_t, rho=0.5, labels=times))
    B = make_factor(FactorSpec("banded", args.n_w, bandwidth=1, decay=0.3, sparse_inverse=True, labels=words))
    truth = precision_support(B)
    gamma = to_correlation(word_sample_cov(residualize(sample_matrix_normal(A, B, args.n_s, args.n_r, args.seed))))
    pen = theoretical_penalties(args.n_w, args.n_s, args.n_r, args.n_eff_t)

    grid = set(np.geomspace(args.lambda_max, args.lambda_min, args.points).tolist())
    grid |= {pen.lambda_A, pen.lambda_B}
    lambdas = sorted(grid, reverse=True)
    path = glasso_path(gamma, lambdas)

    print(f"true word edges: {int(np.triu(truth, 1).sum())}")
    print(f"{'lambda':>10}{'edges':>8}{'F1':>8}{'KKT':>11}  note")
    for est in path:
        note = {pen.lambda_A: "lambda_A", pen.lambda_B: "lambda_B"}.get(est.lam, "")
        f1 = support_f1(est.support(), truth)
        print(f"{est.lam:>10.4f}{est.n_edges:>8d}{f1:>8.3f}{est.kkt_residual:>11.1e}  {note}")
    for hi, lo, e_hi, e_lo in path_sparsity_violations(path):
        print(f"edge count fell from {e_hi} to {e_lo} as lambda went {hi:.4f} -> {lo:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
