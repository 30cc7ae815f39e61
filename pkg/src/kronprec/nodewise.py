"""Neighbourhood selection by nodewise lasso on a correlation matrix.

For node ``i`` the regression on all other nodes only needs second moments:

    beta_i = argmin 1/2 b' Gamma_(i) b - <gamma_(i), b> + lam |b|_1

where ``Gamma_(i)`` drops row and column ``i`` and ``gamma_(i)`` is column
``i`` without its diagonal entry.  The coefficients are turned into a
precision estimate column by column and symmetrized.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._lasso import quadratic_lasso
from .covariance import SymMatrix
from .errors import DimensionMismatch, IndexOutOfRange, NoConvergence, SingularResidual, ValidationError
from .glasso import SolverConfig

ZERO_TOL = 1e-10
RULES = ("or", "and")


@dataclass(frozen=True, eq=False)
class NodewiseFit:
    betas: np.ndarray  # (p, p-1); row i regresses node i on the others in label order
    theta_tilde: np.ndarray
    theta: SymMatrix
    lam: float | None = None
    threshold: float = 0.0
    iterations: tuple[int, ...] = ()
    kkt: tuple[float, ...] = ()

    @property
    def labels(self) -> tuple[str, ...]:
        return self.theta.labels

    def coefficient_matrix(self) -> np.ndarray:
        """``C[i, j]`` is the coefficient of node ``j`` in the regression of node ``i``."""
        p = self.betas.shape[0]
        C = np.zeros((p, p))
        for i in range(p):
            C[i, np.arange(p) != i] = self.betas[i]
        return C

    def thresholded(self) -> SymMatrix:
        return threshold_precision(self.theta, self.threshold)

    def report(self) -> dict:
        return {
            "lambda": self.lam,
            "threshold": self.threshold,
            "iterations": list(self.iterations),
            "kkt_residual": max(self.kkt, default=0.0),
            "node_kkt": list(self.kkt),
        }


def _node_problem(gamma: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    keep = np.arange(gamma.shape[0]) != i
    return np.ascontiguousarray(gamma[np.ix_(keep, keep)]), np.ascontiguousarray(gamma[keep, i])


def _solve_node(gamma, i, lam, cfg, beta0=None):
    G, c = _node_problem(gamma, i)
    beta = np.zeros(c.shape[0]) if beta0 is None else np.array(beta0, dtype=float)
    iters, viol = quadratic_lasso(G, c, float(lam), beta, cfg.inner_tol, cfg.inner_max_iter)
    if viol > cfg.inner_tol:
        warnings.warn(
            f"node {i}: lasso stopped after {iters} sweeps with KKT violation {viol:.3g}",
            NoConvergence,
            stacklevel=3,
        )
    return beta + 0.0, iters, viol


def lasso_node(gamma: SymMatrix, i: int, lam: float, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Lasso coefficients of node ``i`` on the remaining nodes (length ``dim - 1``)."""
    if not 0 <= i < gamma.dim:
        raise IndexOutOfRange(f"node index {i} out of range 0..{gamma.dim - 1}")
    if not lam >= 0:
        raise ValidationError(f"penalty must be nonnegative, got {lam}")
    return _solve_node(gamma.entries, i, lam, cfg)[0]


def reconstruct_theta(
    gamma: SymMatrix,
    betas,
    *,
    lam: float | None = None,
    threshold: float = 0.0,
    iterations: tuple[int, ...] = (),
    kkt: tuple[float, ...] = (),
) -> NodewiseFit:
    """Precision estimate from per-node coefficients.

    Column ``j`` of ``theta_tilde`` has diagonal ``1 / (Gamma_jj - Gamma_{j,-j} beta_j)``
    and off-diagonal ``-theta_tilde_jj * beta_j``; ``theta`` is its symmetric part.
    """
    G = gamma.entries
    p = gamma.dim
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (p, p - 1):
        raise DimensionMismatch(f"expected coefficients of shape {(p, p - 1)}, got {betas.shape}")
    tt = np.zeros((p, p))
    for j in range(p):
        keep = np.arange(p) != j
        resid = G[j, j] - G[j, keep] @ betas[j]
        if not resid > 0:
            raise SingularResidual(f"node {gamma.labels[j]!r}: residual variance {resid:.3g} <= 0")
        tt[j, j] = 1.0 / resid
        tt[keep, j] = 0.0 - tt[j, j] * betas[j]
    theta = SymMatrix((tt + tt.T) / 2, "precision", gamma.labels)
    return NodewiseFit(betas, tt, theta, lam, threshold, tuple(iterations), tuple(kkt))


def nodewise(
    gamma: SymMatrix, lam: float, cfg: SolverConfig = SolverConfig(), *, threshold: float = 0.0
) -> NodewiseFit:
    """Run the lasso for every node and reconstruct the precision estimate."""
    if not lam >= 0:
        raise ValidationError(f"penalty must be nonnegative, got {lam}")
    results = [_solve_node(gamma.entries, i, lam, cfg) for i in range(gamma.dim)]
    betas = np.array([b for b, _, _ in results]).reshape(gamma.dim, gamma.dim - 1)
    return reconstruct_theta(
        gamma,
        betas,
        lam=float(lam),
        threshold=threshold,
        iterations=tuple(int(n) for _, n, _ in results),
        kkt=tuple(float(v) for _, _, v in results),
    )


def mb_edges(fit: NodewiseFit, rule: str = "or") -> set[tuple[str, str]]:
    """Edges from the support of the regression coefficients.

    ``or``: ``i - j`` if either regression selects the other node;
    ``and``: only if both do.  Pairs are ordered as in ``fit.labels``.
    """
    if rule not in RULES:
        raise ValidationError(f"rule must be one of {RULES}, got {rule!r}")
    nz = np.abs(fit.coefficient_matrix()) >= ZERO_TOL
    adj = (nz | nz.T) if rule == "or" else (nz & nz.T)
    labels = fit.labels
    return {(labels[i], labels[j]) for i, j in zip(*np.nonzero(np.triu(adj, 1)))}


def threshold_precision(theta: SymMatrix, tau: float) -> SymMatrix:
    """Zero the off-diagonal entries with ``|theta_ij| < tau``."""
    if not tau >= 0:
        raise ValidationError(f"threshold must be nonnegative, got {tau}")
    t = np.array(theta.entries)
    small = np.abs(t) < tau
    np.fill_diagonal(small, False)
    t[small] = 0.0
    return SymMatrix(t, theta.kind, theta.labels)
