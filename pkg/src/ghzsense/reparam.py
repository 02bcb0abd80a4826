"""Linear reparametrizations that isolate the average phase.

The original per-node chart is degenerate for ring-pair states: the
alternating direction (+1, -1, ..., +1, -1) on an even ring changes no pair
sum, so every Fisher matrix in that chart is singular.  The constructions
here move that direction into a single coordinate which can then be dropped,
leaving an invertible problem whose second coordinate is exactly the average
phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .qfim import Chart, FisherMatrix

IDENTITY_TOL = 1e-10


@dataclass(eq=False)
class Reparametrization:
    """Invertible linear change of phase coordinates theta = forward @ phi.

    ``labels`` name the new coordinates with the irrelevant one first;
    ``kept_indices`` are the coordinates retained when it is dropped.  The
    ``inverse`` field is the numerically computed matrix inverse and is the
    one used everywhere in the toolkit.
    """

    forward: np.ndarray
    inverse: np.ndarray
    labels: tuple[str, ...]
    kept_indices: tuple[int, ...]
    name: str

    def __post_init__(self):
        self.forward = np.asarray(self.forward, dtype=float)
        self.inverse = np.asarray(self.inverse, dtype=float)
        d = self.forward.shape[0]
        if self.forward.shape != (d, d) or self.inverse.shape != (d, d):
            raise ValidationError("forward and inverse must be square matrices of equal size")
        if len(self.labels) != d:
            raise ValidationError(f"expected {d} labels, got {len(self.labels)}")
        self.labels = tuple(str(s) for s in self.labels)
        self.kept_indices = tuple(int(i) for i in self.kept_indices)
        if any(not 0 <= i < d for i in self.kept_indices) or len(
            set(self.kept_indices)
        ) != len(self.kept_indices):
            raise ValidationError("kept_indices must be distinct coordinate indices")
        residual = float(np.max(np.abs(self.forward @ self.inverse - np.eye(d))))
        if residual > IDENTITY_TOL:
            raise ValidationError(
                f"forward @ inverse deviates from identity by {residual:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.forward.shape[0]

    def apply(self, phases) -> np.ndarray:
        """Map original phases to the new coordinates."""
        phi = np.asarray(phases, dtype=float)
        if phi.shape != (self.dim,):
            raise ValidationError(f"expected phase vector of shape ({self.dim},)")
        return self.forward @ phi

    def to_phases(self, params) -> np.ndarray:
        """Map new coordinates back to original phases."""
        theta = np.asarray(params, dtype=float)
        if theta.shape != (self.dim,):
            raise ValidationError(f"expected parameter vector of shape ({self.dim},)")
        return self.inverse @ theta

    def chart(self, drop_irrelevant: bool = False) -> Chart:
        """Chart whose directions are the columns of the inverse matrix."""
        if drop_irrelevant:
            idx = list(self.kept_indices)
            labels = tuple(self.labels[i] for i in idx)
            return Chart(self.name, labels, self.inverse[:, idx])
        return Chart(self.name, self.labels, self.inverse)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "d": int(self.dim),
            "labels": list(self.labels),
            "kept_indices": list(self.kept_indices),
            "forward": [[float(x) for x in row] for row in self.forward],
            "inverse": [[float(x) for x in row] for row in self.inverse],
        }

    @classmethod
    def from_json_dict(cls, doc) -> "Reparametrization":
        try:
            return cls(
                np.array(doc["forward"], dtype=float),
                np.array(doc["inverse"], dtype=float),
                tuple(doc["labels"]),
                tuple(doc["kept_indices"]),
                str(doc["name"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed reparametrization document: {exc}") from exc


def _check_even_ring(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise ValidationError(f"node count must be an integer, got {d!r}")
    if d < 4 or d % 2 != 0:
        raise ValidationError(f"node count must be an even integer >= 4, got {d}")


def build_mc(d: int) -> Reparametrization:
    """Average-phase-first cyclic-difference coordinates for an even ring.

    Row 0 (theta_0, the irrelevant coordinate) is the alternating pattern
    (-1, +1, ..., -1, +1)/d; row 1 (theta_1) is the average (1, ..., 1)/d;
    row i for i >= 2 is the scaled difference (phi_{i-1} - phi_{i+1})/d.
    The transform is not orthogonal; its numerical inverse satisfies
    column sums (0, d, 0, ..., 0), which is what decouples theta_1 from the
    remaining coordinates in any pushed-forward Fisher matrix.
    """
    _check_even_ring(d)
    forward = np.zeros((d, d))
    forward[0] = [(-1.0) ** j / d for j in range(1, d + 1)]
    forward[1] = 1.0 / d
    for row in range(2, d):
        forward[row, row - 2] += 1.0 / d
        forward[row, row] -= 1.0 / d
    inverse = np.linalg.inv(forward)
    labels = tuple(f"theta_{i}" for i in range(d))
    rep = Reparametrization(forward, inverse, labels, tuple(range(1, d)), "mc")
    sums = inverse.sum(axis=0)
    expected = np.zeros(d)
    expected[1] = d
    assert np.max(np.abs(sums - expected)) < 1e-9, "inverse column sums must be (0, d, 0, ...)"
    return rep


def build_orthogonal_d4() -> Reparametrization:
    """Orthogonal 4-node chart (phi_0, phi_a, phi_b, phi_c).

    phi_a is the sum of all four phases over 2, so the average phase is
    phi_a / 2; phi_0 carries the alternating direction.  The matrix is its
    own transpose-inverse.
    """
    forward = 0.5 * np.array(
        [
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0],
        ]
    )
    labels = ("phi_0", "phi_a", "phi_b", "phi_c")
    return Reparametrization(forward, forward.T.copy(), labels, (1, 2, 3), "d4-orthogonal")


@dataclass
class InverseCheckReport:
    """Comparison of the literal closed-form inverse against the numerical one."""

    nodes: int
    closed_form: np.ndarray
    numerical: np.ndarray
    max_abs_discrepancy: float
    matching_columns: tuple[int, ...]


def closed_form_inverse_check(d: int) -> InverseCheckReport:
    """Evaluate the published-style closed-form inverse and report deviations.

    The closed form uses a modified step function H with H(x) = 1 for x >= 0,
    which makes both step terms fire on the diagonal of the difference block;
    it is evaluated literally here and compared against the numerical inverse,
    which is authoritative throughout the toolkit.
    """
    rep = build_mc(d)
    closed = np.zeros((d, d))
    for i in range(1, d + 1):
        parity_i = (-1.0) ** i
        for j in range(1, d + 1):
            if j == 1:
                closed[i - 1, j - 1] = parity_i
            elif j == 2:
                closed[i - 1, j - 1] = 1.0
            else:
                if parity_i != (-1.0) ** j:
                    continue
                offset = j - 2 + (1 if parity_i == 1.0 else 0)
                head = (1 if j - i >= 0 else 0) * (1.0 - offset / d)
                tail = (1 if i - j >= 0 else 0) * (offset / d)
                closed[i - 1, j - 1] = d * (head - tail)
    gap = np.abs(closed - rep.inverse)
    matching = tuple(
        col for col in range(d) if float(np.max(gap[:, col])) <= 1e-12
    )
    return InverseCheckReport(d, closed, rep.inverse.copy(), float(np.max(gap)), matching)


def pushforward_fisher(
    matrix: FisherMatrix, rep: Reparametrization, drop_irrelevant: bool = False
) -> FisherMatrix:
    """Re-express a Fisher matrix in the coordinates of ``rep``.

    With J the inverse matrix (columns are the new chart's phase-space
    directions), the pushed matrix is J^T F J; dropping the irrelevant
    coordinate afterwards removes its (identically zero) row and column.
    """
    if matrix.dim != rep.dim:
        raise ValidationError(
            f"matrix dimension {matrix.dim} does not match reparametrization "
            f"dimension {rep.dim}"
        )
    jac = rep.inverse
    pushed = jac.T @ matrix.entries @ jac
    pushed = 0.5 * (pushed + pushed.T)
    if drop_irrelevant:
        idx = np.array(rep.kept_indices, dtype=int)
        pushed = pushed[np.ix_(idx, idx)]
    return FisherMatrix(
        pushed,
        matrix.kind,
        rep.chart(drop_irrelevant),
        matrix.photons,
        matrix.nodes,
        matrix.phases,
    )
