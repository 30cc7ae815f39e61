"""Word-axis and time-axis Gram matrices, correlations and penalty levels.

Both Gram matrices treat every ``(speaker, trial)`` residual slice
``R = X(i, r) - Xbar(i)`` (shape ``n_w x n_t``) as one replicate:

* word Gram  ``S_A = sum R R^T / (n_t n_s n_r)``   (``n_w x n_w``)
* time Gram  ``S_B = sum R^T R / (n_w n_s n_r)``   (``n_t x n_t``)

The divisors are used as written, with no degrees-of-freedom correction.
"""
from __future__ import annotations

import csv
import json
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .data import ReplicateTensor, time_labels
from .errors import DimensionMismatch, ValidationError, ZeroVariance

KINDS = ("covariance", "correlation", "precision")

SYM_RTOL = 1e-12
UNIT_DIAG_TOL = 1e-12
PSD_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense symmetric matrix with row/column labels and a kind tag."""

    entries: np.ndarray
    kind: str
    labels: tuple[str, ...]

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != a.shape[0]:
            raise DimensionMismatch(f"{len(labels)} labels for a {a.shape[0]}x{a.shape[0]} matrix")
        if len(set(labels)) != len(labels):
            raise ValidationError("matrix labels are not unique")
        if not np.all(np.isfinite(a)):
            raise ValidationError("matrix has non-finite entries")
        scale = max(float(np.max(np.abs(a))), 1e-300)
        if np.max(np.abs(a - a.T)) > SYM_RTOL * scale:
            raise ValidationError("matrix is not symmetric")
        if self.kind == "correlation":
            if np.max(np.abs(np.diag(a) - 1.0)) > UNIT_DIAG_TOL:
                raise ValidationError("correlation matrix must have unit diagonal")
            if np.max(np.abs(a)) > 1.0 + UNIT_DIAG_TOL:
                raise ValidationError("correlation entries must lie in [-1, 1]")
        elif self.kind == "covariance":
            min_eig = float(np.linalg.eigvalsh(a)[0])
            if min_eig < -PSD_RTOL * max(float(np.max(np.diag(a))), 0.0):
                raise ValidationError(f"covariance matrix is not PSD (min eigenvalue {min_eig:.3g})")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def permuted(self, order: Sequence[int]) -> SymMatrix:
        order = list(order)
        return SymMatrix(self.entries[np.ix_(order, order)], self.kind, [self.labels[i] for i in order])


@dataclass(frozen=True)
class PenaltySpec:
    """Theory-guided penalty levels.

    ``lambda_A = sqrt(log n_w / (n_s n_r n_w))`` and
    ``lambda_B = sqrt(log n_w / (n_s n_r n_eff_t))`` (natural log).
    ``lambda_A`` uses the word count as sample size and so goes with the
    time-axis estimate; ``lambda_B`` uses the effective number of time points
    and goes with the word-axis estimate.
    """

    lambda_A: float
    lambda_B: float
    n_w: int
    n_s: int
    n_r: int
    n_eff_t: int

    def for_axis(self, axis: str) -> float:
        if axis == "word":
            return self.lambda_B
        if axis == "time":
            return self.lambda_A
        raise ValidationError(f"axis must be 'word' or 'time', got {axis!r}")


def _replicates(r: ReplicateTensor) -> np.ndarray:
    # (n_s * n_r, n_w, n_t) stack of residual slices
    return r.values.transpose(0, 2, 1, 3).reshape(r.n_s * r.n_r, r.n_w, r.n_t)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def word_sample_cov(r: ReplicateTensor) -> SymMatrix:
    """Word-word Gram matrix ``S_A`` (divisor ``n_t n_s n_r``)."""
    flat = r.values.transpose(1, 0, 2, 3).reshape(r.n_w, -1)
    s = flat @ flat.T / (r.n_t * r.n_s * r.n_r)
    return SymMatrix(_symmetrize(s), "covariance", r.word_ids)


def time_sample_cov(r: ReplicateTensor, labels: Sequence[str] | None = None) -> SymMatrix:
    """Time-time Gram matrix ``S_B`` (divisor ``n_w n_s n_r``)."""
    flat = r.values.transpose(3, 0, 1, 2).reshape(r.n_t, -1)
    s = flat @ flat.T / (r.n_w * r.n_s * r.n_r)
    return SymMatrix(_symmetrize(s), "covariance", labels or time_labels(r.n_t))


def sample_cov(r: ReplicateTensor, axis: str) -> SymMatrix:
    if axis == "word":
        return word_sample_cov(r)
    if axis == "time":
        return time_sample_cov(r)
    raise ValidationError(f"axis must be 'word' or 'time', got {axis!r}")


def to_correlation(s: SymMatrix) -> SymMatrix:
    """``Gamma_ij = S_ij / sqrt(S_ii S_jj)`` with an exactly unit diagonal."""
    diag = np.diag(s.entries)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise ZeroVariance(f"zero variance for {', '.join(s.labels[i] for i in bad)}")
    d = np.sqrt(diag)
    g = s.entries / np.outer(d, d)
    g = np.clip(_symmetrize(g), -1.0, 1.0)
    np.fill_diagonal(g, 1.0)
    return SymMatrix(g, "correlation", s.labels)


def theoretical_penalties(n_w: int, n_s: int, n_r: int, n_eff_t: int) -> PenaltySpec:
    for name, v in (("n_w", n_w), ("n_s", n_s), ("n_r", n_r), ("n_eff_t", n_eff_t)):
        if int(v) != v or v < 1:
            raise ValidationError(f"{name} must be a positive integer, got {v!r}")
    log_w = math.log(n_w)
    return PenaltySpec(
        lambda_A=math.sqrt(log_w / (n_s * n_r * n_w)),
        lambda_B=math.sqrt(log_w / (n_s * n_r * n_eff_t)),
        n_w=int(n_w),
        n_s=int(n_s),
        n_r=int(n_r),
        n_eff_t=int(n_eff_t),
    )


def kronecker_reconstruct(
    A_rho: SymMatrix, B_rho: SymMatrix, S_A: SymMatrix, S_B: SymMatrix
) -> tuple[SymMatrix, SymMatrix]:
    """Rescale correlation factors back to covariance scale.

    ``A_hat = D_A^{1/2} A_rho D_A^{1/2}`` with ``D_A = diag(S_A)``, so
    ``tr(A_hat) = tr(S_A)``.  ``B_hat`` uses ``diag(S_B)`` normalised to mean
    one, which puts the overall variance level of ``A_hat (x) B_hat`` on the
    scale of the residuals: the Kronecker factors are only identified up to
    ``(c A, B / c)``.
    """
    if A_rho.dim != S_A.dim or B_rho.dim != S_B.dim:
        raise DimensionMismatch(
            f"factor dims ({A_rho.dim}, {B_rho.dim}) do not match Gram dims ({S_A.dim}, {S_B.dim})"
        )
    d_a = np.diag(S_A.entries)
    d_b = np.diag(S_B.entries)
    d_b = d_b / d_b.mean()
    a_hat = np.sqrt(np.outer(d_a, d_a)) * A_rho.entries
    b_hat = np.sqrt(np.outer(d_b, d_b)) * B_rho.entries
    c = np.trace(S_A.entries) / np.trace(a_hat)
    return (
        SymMatrix(a_hat * c, "covariance", S_A.labels),
        SymMatrix(b_hat / c, "covariance", S_B.labels),
    )


# --------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_json(m: SymMatrix) -> dict:
    return {"labels": list(m.labels), "kind": m.kind, "rows": m.entries.tolist()}


def write_matrix_json(m: SymMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(m), fh, indent=1)
        fh.write("\n")


def write_matrix_csv(m: SymMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["", *m.labels])
        for label, row in zip(m.labels, m.entries):
            out.writerow([label, *(_fmt(x) for x in row)])


def load_matrix(path: str | os.PathLike, kind: str | None = None) -> SymMatrix:
    """Read a matrix written by :func:`write_matrix_json` or :func:`write_matrix_csv`.

    CSV files carry no kind tag; pass ``kind`` (default ``covariance``).
    """
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return SymMatrix(np.array(obj["rows"], dtype=float), kind or obj["kind"], obj["labels"])
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    labels = [h.strip() for h in rows[0][1:]]
    body = [r for r in rows[1:] if r]
    if [r[0].strip() for r in body] != labels:
        raise ValidationError(f"{path}: row labels do not match column labels")
    entries = np.array([[float(x) for x in r[1:]] for r in body])
    return SymMatrix(entries, kind or "covariance", labels)
