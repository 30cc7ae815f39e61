"""Graphical lasso with an unpenalized diagonal.

Minimizes ``tr(Gamma Theta) - log det Theta + lam * sum_{i != j} |Theta_ij|``
over positive definite ``Theta`` by block coordinate descent on
``W = Theta^{-1}``: each sweep visits every column, solves a quadratic lasso
for the off-diagonal block against the current ``W``, and writes the updated
column back.  The diagonal of ``W`` stays equal to ``diag(Gamma)``.
"""
from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ._lasso import quadratic_lasso
from .covariance import SymMatrix
from .errors import DimensionMismatch, NoConvergence, NotPositiveDefinite, ValidationError

ZERO_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-7  # mean absolute off-diagonal change of W per sweep, and KKT certificate
    max_sweeps: int = 500
    inner_tol: float = 1e-11  # KKT violation of each inner lasso
    inner_max_iter: int = 10000

    def __post_init__(self):
        for name in ("tol", "max_sweeps", "inner_tol", "inner_max_iter"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"SolverConfig.{name} must be positive")


@dataclass(frozen=True, eq=False)
class PrecisionEstimate:
    theta: SymMatrix
    sigma: SymMatrix
    lam: float
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = field(default=())

    def support(self) -> np.ndarray:
        """Off-diagonal structural nonzeros of ``theta`` (``|theta_ij| >= 1e-10``)."""
        mask = np.abs(self.theta.entries) >= ZERO_TOL
        np.fill_diagonal(mask, False)
        return mask

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.support(), 1)))

    def report(self) -> dict:
        return {
            "lambda": self.lam,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def objective(gamma: np.ndarray, theta: np.ndarray, lam: float) -> float:
    """Penalized negative log-likelihood; ``inf`` off the PD cone."""
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return float("inf")
    off = np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return float(np.sum(gamma * theta) - logdet + lam * off)


def _assemble_theta(W: np.ndarray, betas: np.ndarray, others: list[np.ndarray]) -> np.ndarray:
    p = W.shape[0]
    theta = np.zeros((p, p))
    for j in range(p):
        idx = others[j]
        b = betas[j]
        t_jj = 1.0 / (W[j, j] - W[idx, j] @ b)
        col = 0.0 - b * t_jj  # no negative zeros
        theta[idx, j] = col
        theta[j, idx] = col
        theta[j, j] = t_jj
    return theta


def glasso(
    gamma: SymMatrix,
    lam: float,
    cfg: SolverConfig = SolverConfig(),
    *,
    warm_start: PrecisionEstimate | None = None,
) -> PrecisionEstimate:
    """Sparse precision estimate for a correlation (or covariance) input.

    With ``lam == 0`` the input must be strictly positive definite and the
    result is its inverse.  If ``max_sweeps`` is reached the last iterate is
    returned with ``converged=False`` and a :class:`NoConvergence` warning.
    """
    if not lam >= 0:
        raise ValidationError(f"penalty must be nonnegative, got {lam}")
    S = np.array(gamma.entries)
    p = S.shape[0]
    if np.any(np.diag(S) <= 0):
        raise ValidationError("input must have a positive diagonal")
    if lam == 0:
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("unpenalized fit needs a strictly positive definite input") from None

    if p == 1:
        theta = 1.0 / S
        return _finish(gamma, S, theta, S.copy(), lam, 0, True, ())

    others = [np.delete(np.arange(p), j) for j in range(p)]
    if warm_start is not None:
        if warm_start.theta.dim != p:
            raise DimensionMismatch("warm start has the wrong dimension")
        W = np.array(warm_start.sigma.entries)
        np.fill_diagonal(W, np.diag(S))
        t = warm_start.theta.entries
        betas = np.array([-t[others[j], j] / t[j, j] for j in range(p)])
    else:
        W = S.copy()
        if lam > 0:
            # keep the start strictly PD even for a singular input
            W *= 0.95
            np.fill_diagonal(W, np.diag(S))
        betas = np.zeros((p, p - 1))

    offdiag = ~np.eye(p, dtype=bool)
    history = []
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        W_prev = W.copy()
        for j in range(p):
            idx = others[j]
            W11 = np.ascontiguousarray(W[np.ix_(idx, idx)])
            beta = betas[j]
            quadratic_lasso(W11, S[idx, j], lam, beta, cfg.inner_tol, cfg.inner_max_iter)
            w12 = W11 @ beta
            W[idx, j] = w12
            W[j, idx] = w12
        theta = _assemble_theta(W, betas, others)
        history.append(objective(S, theta, lam))
        change = np.mean(np.abs(W - W_prev)[offdiag])
        # a small W change alone does not bound the optimality gap; also require the certificate
        if change < cfg.tol and _kkt(S, theta, lam) <= cfg.tol:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"glasso did not converge in {cfg.max_sweeps} sweeps (lambda={lam})", NoConvergence, stacklevel=2
        )
    # re-solve every column against the final W so all of theta refers to one W
    for j in range(p):
        idx = others[j]
        W11 = np.ascontiguousarray(W[np.ix_(idx, idx)])
        quadratic_lasso(W11, S[idx, j], lam, betas[j], cfg.inner_tol, cfg.inner_max_iter)
    theta = _assemble_theta(W, betas, others)
    return _finish(gamma, S, theta, W, lam, sweeps, converged, tuple(history))


def _finish(gamma, S, theta, W, lam, sweeps, converged, history) -> PrecisionEstimate:
    theta_m = SymMatrix(theta, "precision", gamma.labels)
    sigma_m = SymMatrix(0.5 * (W + W.T), gamma.kind if gamma.kind != "precision" else "covariance", gamma.labels)
    est = PrecisionEstimate(
        theta=theta_m,
        sigma=sigma_m,
        lam=float(lam),
        objective=objective(S, theta, lam),
        kkt_residual=0.0,
        iterations=sweeps,
        converged=converged,
        history=history,
    )
    object.__setattr__(est, "kkt_residual", kkt_certificate(gamma, est))
    return est


def kkt_certificate(gamma: SymMatrix, est: PrecisionEstimate) -> float:
    """Largest violation of the optimality conditions at ``est.theta``.

    With ``W = theta^{-1}`` the conditions are ``W_ii = Gamma_ii``,
    ``|W_ij - Gamma_ij| <= lam`` where ``theta_ij = 0`` and
    ``W_ij - Gamma_ij = lam * sign(theta_ij)`` elsewhere.
    """
    theta = est.theta.entries
    if theta.shape != gamma.entries.shape:
        raise DimensionMismatch(f"estimate is {theta.shape}, input is {gamma.entries.shape}")
    return _kkt(gamma.entries, theta, est.lam)


def _kkt(S: np.ndarray, theta: np.ndarray, lam: float) -> float:
    try:
        W = np.linalg.inv(theta)
    except np.linalg.LinAlgError:
        return float("inf")
    W = 0.5 * (W + W.T)
    D = W - S
    zero = np.abs(theta) < ZERO_TOL
    viol = np.where(zero, np.maximum(np.abs(D) - lam, 0.0), np.abs(D - lam * np.sign(theta)))
    np.fill_diagonal(viol, np.abs(np.diag(D)))
    return float(viol.max())


def glasso_path(
    gamma: SymMatrix, lambdas: Sequence[float], cfg: SolverConfig = SolverConfig()
) -> list[PrecisionEstimate]:
    """Warm-started solves along a strictly descending penalty sequence."""
    lambdas = [float(x) for x in lambdas]
    if not lambdas:
        return []
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValidationError(f"penalties must be strictly descending, got {lambdas}")
    path = []
    prev = None
    for lam in lambdas:
        prev = glasso(gamma, lam, cfg, warm_start=prev)
        path.append(prev)
    return path


def path_sparsity_violations(path: Sequence[PrecisionEstimate]) -> list[tuple[float, float, int, int]]:
    """Consecutive path points where the edge count drops as the penalty decreases.

    Returns ``(lam_hi, lam_lo, edges_hi, edges_lo)`` for each such pair.  Glasso
    paths are not guaranteed monotone, so this is a diagnostic only.
    """
    out = []
    for hi, lo in zip(path, path[1:]):
        if lo.n_edges < hi.n_edges:
            out.append((hi.lam, lo.lam, hi.n_edges, lo.n_edges))
    return out
