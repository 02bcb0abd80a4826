"""Cramer-Rao variance bounds for linear functions of the phases.

For a weight vector alpha and shot count n, the exact bound on the variance
of an unbiased estimate of alpha^T p is alpha^T F^{-1} alpha / n, defined
only when F is invertible.  The weaker single-direction bound
(alpha^T alpha)^2 / (n alpha^T F alpha) never needs an inverse and by the
Cauchy-Schwarz inequality never exceeds the exact one, with equality exactly
when alpha is an eigenvector of F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularMatrixError, ValidationError
from .measurement import cfim
from .qfim import FisherMatrix, _entries_of, qfim_pure
from .reparam import build_mc, pushforward_fisher

RANK_RTOL = 1e-9


def _weight(alpha, dim: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (dim,):
        raise ValidationError(f"weight vector must have shape ({dim},), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("weight vector entries must be finite")
    if np.linalg.norm(a) == 0.0:
        raise ValidationError("weight vector must be nonzero")
    return a


def _shots(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"shot count must be a positive integer, got {n!r}")
    return int(n)


def exact_crb(matrix, alpha, shots: int = 1) -> float:
    """Exact variance bound alpha^T F^{-1} alpha / shots.

    Refuses numerically singular matrices: the smallest eigenvalue must
    exceed ``RANK_RTOL`` times the largest.  For a singular matrix, remove
    the irrelevant direction with a reparametrization first.
    """
    entries = _entries_of(matrix)
    n = _shots(shots)
    a = _weight(alpha, entries.shape[0])
    eigs = np.linalg.eigvalsh(entries)
    if eigs[-1] <= 0.0 or eigs[0] <= RANK_RTOL * eigs[-1]:
        raise SingularMatrixError(
            "Fisher matrix is numerically singular "
            f"(smallest eigenvalue {eigs[0]:.3e}, largest {eigs[-1]:.3e}); "
            "re-express it in an invertible chart via a reparametrization "
            "before taking the exact bound"
        )
    solved = scipy.linalg.cho_solve(scipy.linalg.cho_factor(entries), a)
    return float(a @ solved) / n


def weak_crb(matrix, alpha, shots: int = 1) -> float:
    """Single-direction bound (alpha^T alpha)^2 / (shots * alpha^T F alpha)."""
    entries = _entries_of(matrix)
    n = _shots(shots)
    a = _weight(alpha, entries.shape[0])
    quad = float(a @ entries @ a)
    scale = float(np.max(np.abs(entries), initial=0.0)) * float(a @ a)
    if quad <= 1e-12 * max(scale, 1e-300):
        raise SingularMatrixError(
            "weight vector lies in the null space of the Fisher matrix "
            f"(alpha^T F alpha = {quad:.3e} for alpha = {a.tolist()}); "
            "no finite information is available along this direction"
        )
    return float(a @ a) ** 2 / (n * quad)


@dataclass
class BoundReport:
    """Exact and weak bounds for one weight vector, with matrix provenance."""

    alpha: np.ndarray
    shots: int
    weak_bound: float
    exact_bound: float | None
    exact_unavailable_reason: str | None
    equality_gap: float | None
    kind: str
    chart_name: str
    photons: int
    nodes: int

    def to_json_dict(self) -> dict:
        return {
            "alpha": [float(x) for x in self.alpha],
            "shots": int(self.shots),
            "weak_bound": float(self.weak_bound),
            "exact_bound": None if self.exact_bound is None else float(self.exact_bound),
            "exact_unavailable_reason": self.exact_unavailable_reason,
            "equality_gap": None if self.equality_gap is None else float(self.equality_gap),
            "kind": self.kind,
            "chart": self.chart_name,
            "N": int(self.photons),
            "d": int(self.nodes),
        }


def bound_report(matrix: FisherMatrix, alpha, shots: int = 1) -> BoundReport:
    """Assemble both bounds; the exact one may be unavailable when singular."""
    a = _weight(alpha, matrix.dim)
    n = _shots(shots)
    weak = weak_crb(matrix, a, n)
    try:
        exact = exact_crb(matrix, a, n)
        reason = None
        gap = exact - weak
    except SingularMatrixError as exc:
        exact = None
        reason = str(exc)
        gap = None
    return BoundReport(
        a,
        n,
        weak,
        exact,
        reason,
        gap,
        matrix.kind,
        matrix.chart.name,
        matrix.photons,
        matrix.nodes,
    )


@dataclass
class WeakExactReport:
    """Two sides of the weak-vs-exact comparison for one (S, alpha) pair."""

    weak_side: float
    exact_side: float
    gap: float
    rayleigh_quotient: float
    eigenvector_residual: float
    alpha_is_eigenvector: bool
    first_diag_reciprocal: float
    first_diag_of_inverse: float
    first_diag_holds: bool


def weak_vs_exact_check(matrix, alpha) -> WeakExactReport:
    """Verify (a^T a)^2 / (a^T S a) <= a^T S^{-1} a for a positive definite S.

    Also reports the eigenvector equality condition and the scalar corollary
    1/S[0,0] <= (S^{-1})[0,0].
    """
    s = _entries_of(matrix)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError("expected a square matrix")
    if float(np.max(np.abs(s - s.T), initial=0.0)) > 1e-10 * max(
        1.0, float(np.max(np.abs(s), initial=0.0))
    ):
        raise ValidationError("expected a symmetric matrix")
    a = _weight(alpha, s.shape[0])
    eigs = np.linalg.eigvalsh(s)
    if eigs[0] <= 0.0:
        raise ValidationError(
            f"matrix must be positive definite; smallest eigenvalue is {eigs[0]:.3e}"
        )
    factor = scipy.linalg.cho_factor(s)
    inv_a = scipy.linalg.cho_solve(factor, a)
    exact_side = float(a @ inv_a)
    quad = float(a @ s @ a)
    norm2 = float(a @ a)
    weak_side = norm2**2 / quad
    rayleigh = quad / norm2
    residual = float(np.linalg.norm(s @ a - rayleigh * a)) / math.sqrt(norm2)
    inverse_first = float(
        scipy.linalg.cho_solve(factor, np.eye(s.shape[0])[:, 0])[0]
    )
    reciprocal_first = 1.0 / float(s[0, 0])
    return WeakExactReport(
        weak_side,
        exact_side,
        exact_side - weak_side,
        rayleigh,
        residual,
        residual <= 1e-9,
        reciprocal_first,
        inverse_first,
        reciprocal_first <= inverse_first + 1e-12,
    )


@dataclass
class SweepRow:
    """One (N, d) point of the average-phase bound sweep."""

    photons: int
    nodes: int
    qcrb: float
    ccrb: float
    ratio: float


def heisenberg_sweep(photon_counts, node_counts) -> list[SweepRow]:
    """Standard-deviation bounds on the average phase over an (N, d) grid.

    The average phase is the second coordinate of the cyclic-difference
    chart; after dropping the irrelevant coordinate both the quantum and
    classical matrices give an exact bound of 1/N at one shot, independent
    of d, so the paired measurement saturates the scaling in N.
    """
    rows = []
    for photons in photon_counts:
        for nodes in node_counts:
            rep = build_mc(nodes)
            zeros = np.zeros(nodes)
            basis = np.zeros(rep.dim - 1)
            basis[0] = 1.0
            quantum = pushforward_fisher(qfim_pure(photons, nodes, zeros), rep, True)
            classical = pushforward_fisher(cfim(photons, nodes, zeros), rep, True)
            qcrb = math.sqrt(exact_crb(quantum, basis, 1))
            ccrb = math.sqrt(exact_crb(classical, basis, 1))
            rows.append(SweepRow(int(photons), int(nodes), qcrb, ccrb, ccrb / qcrb))
    return rows


def sweep_to_csv(rows) -> str:
    lines = ["N,d,qcrb,ccrb,ratio"]
    for row in rows:
        lines.append(
            f"{row.photons},{row.nodes},{row.qcrb:.17g},{row.ccrb:.17g},{row.ratio:.17g}"
        )
    return "\n".join(lines) + "\n"


def sweep_to_json_dict(rows) -> dict:
    return {
        "rows": [
            {
                "N": row.photons,
                "d": row.nodes,
                "qcrb": float(row.qcrb),
                "ccrb": float(row.ccrb),
                "ratio": float(row.ratio),
            }
            for row in rows
        ]
    }
