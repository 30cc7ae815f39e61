"""Synthetic matrix-normal data and brute-force oracles for small problems.

Orientation: each ``(speaker, trial)`` slice ``X`` is ``n_w x n_t`` (rows are
words, columns are time points) and ``Cov(vec X) = A (x) B`` with column
stacking, ``A`` the time-time factor and ``B`` the word-word factor.
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .covariance import SymMatrix
from .data import ReplicateTensor, time_labels
from .errors import DimTooLarge, NotPositiveDefinite, ValidationError

FACTOR_KINDS = ("identity", "ar1", "banded", "block")


@dataclass(frozen=True)
class FactorSpec:
    """Structured covariance factor.

    * ``identity``
    * ``ar1``: ``rho ** |i - j|``
    * ``banded``: ``decay ** |i - j|`` within ``bandwidth`` of the diagonal, 0 beyond
    * ``block``: unit diagonal, ``within_corr`` inside blocks of ``sizes``, 0 across

    With ``sparse_inverse=True`` the pattern is placed on the precision matrix
    instead, and the factor is its inverse rescaled to unit diagonal (so the
    factor's inverse has exactly the pattern's support).
    """

    kind: str
    dim: int
    rho: float = 0.0
    bandwidth: int = 1
    decay: float = 0.5
    sizes: tuple[int, ...] = ()
    within_corr: float = 0.0
    sparse_inverse: bool = False
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise ValidationError(f"kind must be one of {FACTOR_KINDS}, got {self.kind!r}")
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.kind == "block" and sum(self.sizes) != self.dim:
            raise ValidationError(f"block sizes {self.sizes} do not sum to dim {self.dim}")
        if self.kind == "banded" and self.bandwidth < 0:
            raise ValidationError("bandwidth must be nonnegative")


def _pattern(spec: FactorSpec) -> np.ndarray:
    d = spec.dim
    lag = np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    if spec.kind == "identity":
        return np.eye(d)
    if spec.kind == "ar1":
        if not abs(spec.rho) < 1:
            raise NotPositiveDefinite(f"ar1 needs |rho| < 1, got {spec.rho}")
        return spec.rho ** lag.astype(float)
    if spec.kind == "banded":
        return np.where(lag <= spec.bandwidth, spec.decay ** lag.astype(float), 0.0)
    block_id = np.repeat(np.arange(len(spec.sizes)), spec.sizes)
    m = np.where(block_id[:, None] == block_id[None, :], spec.within_corr, 0.0)
    np.fill_diagonal(m, 1.0)
    return m


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def make_factor(spec: FactorSpec) -> SymMatrix:
    m = _pattern(spec)
    if not _is_pd(m):
        raise NotPositiveDefinite(f"{spec.kind} factor with these parameters is not positive definite")
    if spec.sparse_inverse:
        m = np.linalg.inv(m)
        d = np.sqrt(np.diag(m))
        m = m / np.outer(d, d)
        m = 0.5 * (m + m.T)
        np.fill_diagonal(m, 1.0)
    labels = spec.labels or tuple(f"v{k}" for k in range(1, spec.dim + 1))
    return SymMatrix(m, "covariance", labels)


def precision_support(m: SymMatrix, tol: float = 1e-8) -> np.ndarray:
    """Off-diagonal support of ``m^{-1}`` (relative tolerance on the largest entry)."""
    inv = np.linalg.inv(m.entries)
    mask = np.abs(inv) > tol * np.max(np.abs(inv))
    np.fill_diagonal(mask, False)
    return mask


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_matrix_normal(
    A: SymMatrix,
    B: SymMatrix,
    n_s: int,
    n_r: int,
    seed: int,
    *,
    mean_scale: float = 0.0,
    speaker_ids: Sequence[str] | None = None,
    word_ids: Sequence[str] | None = None,
) -> ReplicateTensor:
    """Draw ``X = M_i + L_B Z L_A^T`` for every speaker ``i`` and trial.

    ``Z`` is iid standard normal and ``L`` are lower Cholesky factors.  The
    noise of slice ``(i, r)`` comes from its own stream (seed, spawn key
    ``(0, i, r)``), so the result does not depend on generation order.  With
    ``mean_scale > 0`` each speaker gets a mean matrix ``M_i`` drawn from
    stream ``(1, i)`` and scaled by ``mean_scale``; it is shared by the
    speaker's trials and removed exactly by residualization.
    """
    try:
        L_A = np.linalg.cholesky(A.entries)
        L_B = np.linalg.cholesky(B.entries)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("both factors must be strictly positive definite") from None
    n_t, n_w = A.dim, B.dim
    values = np.empty((n_s, n_w, n_r, n_t))
    for i in range(n_s):
        mean = mean_scale * _stream(seed, 1, i).standard_normal((n_w, n_t)) if mean_scale else 0.0
        for r in range(n_r):
            Z = _stream(seed, 0, i, r).standard_normal((n_w, n_t))
            values[i, :, r, :] = mean + L_B @ Z @ L_A.T
    speakers = speaker_ids or tuple(f"s{k}" for k in range(1, n_s + 1))
    words = word_ids or B.labels
    return ReplicateTensor(values, speakers, words)


def support_f1(estimated: np.ndarray, truth: np.ndarray) -> float:
    """F1 score of two symmetric boolean supports, over pairs ``i < j``."""
    iu = np.triu_indices(truth.shape[0], 1)
    e, t = estimated[iu].astype(bool), truth[iu].astype(bool)
    tp = int(np.sum(e & t))
    denom = int(e.sum() + t.sum())
    return 1.0 if denom == 0 else 2.0 * tp / denom


# --------------------------------------------------------------------------
# oracles


def _covariance_selection(C: np.ndarray, free: list[tuple[int, int]], max_iter: int = 200):
    """Minimize ``tr(C Theta) - log det Theta`` over PD ``Theta`` supported on ``free``.

    Damped Newton on the free entries.  Returns ``None`` when the problem is
    unbounded or the iteration does not settle.
    """
    p = C.shape[0]
    basis = []
    for i, j in free:
        E = np.zeros((p, p))
        E[i, j] = E[j, i] = 1.0
        basis.append(E)
    theta = np.diag(1.0 / np.diag(C))

    def f(t):
        sign, logdet = np.linalg.slogdet(t)
        return np.inf if sign <= 0 else float(np.sum(C * t) - logdet)

    fx = f(theta)
    for _ in range(max_iter):
        W = np.linalg.inv(theta)
        g = np.array([np.sum((C - W) * E) for E in basis])
        WE = [W @ E for E in basis]
        H = np.array([[np.sum(a * b.T) for b in WE] for a in WE])
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return None
        decrement = -g @ step
        if decrement < 1e-16:
            return theta
        delta = sum(s * E for s, E in zip(step, basis))
        t = 1.0
        while True:
            cand = theta + t * delta
            fc = f(cand)
            if fc <= fx - 0.25 * t * decrement:
                break
            t *= 0.5
            if t < 1e-14:
                return theta
        theta, fx = cand, fc
        if np.max(np.abs(theta)) > 1e12:
            return None
    return None


def oracle_glasso(gamma: SymMatrix, lam: float) -> SymMatrix:
    """Exhaustive-support solver for the off-diagonal-penalized glasso (dim <= 4).

    For every sign pattern of the off-diagonal entries the problem with signs
    fixed is smooth (the penalty becomes linear), so it is solved by Newton's
    method with the zero entries held at zero.  Candidates whose signs agree
    with the pattern and whose zero entries satisfy ``|W_ij - Gamma_ij| <= lam``
    are optimal; the lowest objective among them is returned.
    """
    G = np.array(gamma.entries)
    p = G.shape[0]
    if p > 4:
        raise DimTooLarge(f"oracle supports dim <= 4, got {p}")
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    best, best_val = None, math.inf
    for signs in itertools.product((-1, 0, 1), repeat=len(pairs)):
        S = np.zeros((p, p))
        free = [(i, i) for i in range(p)]
        for (i, j), s in zip(pairs, signs):
            S[i, j] = S[j, i] = s
            if s:
                free.append((i, j))
        theta = _covariance_selection(G + lam * S, free)
        if theta is None:
            continue
        W = np.linalg.inv(theta)
        ok = True
        for (i, j), s in zip(pairs, signs):
            if s and s * theta[i, j] < -1e-9:
                ok = False
            if not s and abs(W[i, j] - G[i, j]) > lam + 1e-8:
                ok = False
        if not ok:
            continue
        val = float(np.sum(G * theta) - np.linalg.slogdet(theta)[1] + lam * (np.abs(theta).sum() - np.trace(np.abs(theta))))
        if val < best_val:
            best, best_val = theta, val
    if best is None:
        raise NotPositiveDefinite("no feasible support pattern (unpenalized singular input?)")
    return SymMatrix(0.5 * (best + best.T), "precision", gamma.labels)


def oracle_lasso(G: np.ndarray, c: np.ndarray, lam: float) -> np.ndarray:
    """Minimize ``1/2 b'Gb - c'b + lam |b|_1`` by enumerating sign patterns (dim <= 8)."""
    G = np.asarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    p = c.shape[0]
    if p > 8:
        raise DimTooLarge(f"oracle supports dim <= 8, got {p}")
    best, best_val = np.zeros(p), 0.0
    for signs in itertools.product((-1, 0, 1), repeat=p):
        s = np.array(signs, dtype=float)
        act = s != 0
        b = np.zeros(p)
        if act.any():
            try:
                b[act] = np.linalg.solve(G[np.ix_(act, act)], c[act] - lam * s[act])
            except np.linalg.LinAlgError:
                continue
            if np.any(s[act] * b[act] < 0):
                continue
        grad = G @ b - c
        if np.any(np.abs(grad[~act]) > lam + 1e-12):
            continue
        val = 0.5 * b @ G @ b - c @ b + lam * np.abs(b).sum()
        if val < best_val - 1e-15:
            best, best_val = b, val
    return best


def default_labels(n_w: int, n_t: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return tuple(f"w{k}" for k in range(1, n_w + 1)), time_labels(n_t)
