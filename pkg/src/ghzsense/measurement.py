"""Paired diagonal-basis projective measurement and its classical Fisher matrix.

Measuring both nodes of each ring pair in the +/- (diagonal) polarization
basis yields four outcomes per pair.  With x_j = phi_j + phi_{j+1} the
agreeing patterns share probability (1 + cos((N/2) x_j)) / (4 d) and the
disagreeing patterns share (1 - cos((N/2) x_j)) / (4 d).

For the Fisher matrix the four outcomes of pair j collapse analytically:
1/(1+c) + 1/(1-c) = 2/sin^2 cancels the sin^2 from the squared derivative,
leaving the phase-independent kernel (N^2 / (4 d)) * grad(x_j) grad(x_j)^T.
The cancellation also covers outcomes of probability zero, so the kernel is
valid at every phase point, not just where all probabilities are positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .ghz_state import _check_counts, node_pair, phase_vector
from .qfim import Chart, FisherMatrix, _directions_for

PATTERNS = ("++", "--", "+-", "-+")


class OutcomeLabel(NamedTuple):
    """Measurement outcome: ring-pair index and +/- pattern at its two nodes."""

    pair: int
    pattern: str


def outcome_labels(d: int) -> list[OutcomeLabel]:
    """All 4*d outcome labels in canonical order."""
    return [OutcomeLabel(j, p) for j in range(1, d + 1) for p in PATTERNS]


@dataclass(eq=False)
class OutcomeDistribution:
    """Probability table over the 4*d paired diagonal-basis outcomes."""

    probabilities: dict[OutcomeLabel, float]
    photons: int
    nodes: int
    phases: np.ndarray

    def __post_init__(self):
        _check_counts(self.photons, self.nodes)
        self.phases = phase_vector(self.phases, self.nodes)
        self.probabilities = dict(self.probabilities)
        expected = set(outcome_labels(self.nodes))
        if set(self.probabilities) != expected:
            raise ValidationError(
                f"distribution must cover exactly the {4 * self.nodes} canonical outcomes"
            )
        for label, p in self.probabilities.items():
            if not math.isfinite(p) or p < 0.0:
                raise ValidationError(f"probability for {label} must be finite and >= 0")
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {total!r}, expected 1")
        for j in range(1, self.nodes + 1):
            if self.probabilities[OutcomeLabel(j, "++")] != self.probabilities[
                OutcomeLabel(j, "--")
            ] or self.probabilities[OutcomeLabel(j, "+-")] != self.probabilities[
                OutcomeLabel(j, "-+")
            ]:
                raise ValidationError(
                    f"pattern symmetry violated for pair {j}: ++/-- and +-/-+ must match"
                )

    def probability(self, label: OutcomeLabel) -> float:
        return self.probabilities[label]

    def as_array(self) -> np.ndarray:
        """Probabilities in canonical label order."""
        return np.array([self.probabilities[lab] for lab in outcome_labels(self.nodes)])

    def to_json_dict(self) -> dict:
        rows = []
        for label in outcome_labels(self.nodes):
            j, k = node_pair(label.pair, self.nodes)
            rows.append(
                {
                    "pair": [j, k],
                    "pattern": label.pattern,
                    "probability": float(self.probabilities[label]),
                }
            )
        return {
            "N": int(self.photons),
            "d": int(self.nodes),
            "phases": [float(x) for x in self.phases],
            "outcomes": rows,
        }

    @classmethod
    def from_json_dict(cls, doc) -> "OutcomeDistribution":
        try:
            probs = {
                OutcomeLabel(int(row["pair"][0]), str(row["pattern"])): float(
                    row["probability"]
                )
                for row in doc["outcomes"]
            }
            return cls(probs, int(doc["N"]), int(doc["d"]), np.array(doc["phases"]))
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed distribution document: {exc}") from exc


def distribution_to_csv(dist: OutcomeDistribution) -> str:
    """CSV rows (pair, pattern, probability), 17 significant digits."""
    lines = ["pair,pattern,probability"]
    for label in outcome_labels(dist.nodes):
        j, k = node_pair(label.pair, dist.nodes)
        lines.append(f"{j}-{k},{label.pattern},{dist.probabilities[label]:.17g}")
    return "\n".join(lines) + "\n"


def outcome_distribution(photons: int, nodes: int, phases) -> OutcomeDistribution:
    """Outcome probabilities of the paired diagonal-basis measurement."""
    _check_counts(photons, nodes)
    phi = phase_vector(phases, nodes)
    half = photons / 2.0
    d = nodes
    probs: dict[OutcomeLabel, float] = {}
    for j in range(1, d + 1):
        c = math.cos(half * (phi[j - 1] + phi[j % d]))
        agree = (1.0 + c) / (4.0 * d)
        disagree = (1.0 - c) / (4.0 * d)
        probs[OutcomeLabel(j, "++")] = agree
        probs[OutcomeLabel(j, "--")] = agree
        probs[OutcomeLabel(j, "+-")] = disagree
        probs[OutcomeLabel(j, "-+")] = disagree
    return OutcomeDistribution(probs, photons, nodes, phi)


def pair_sum_gradients(d: int, chart: Chart | None = None) -> np.ndarray:
    """Rows are grad of x_j = phi_j + phi_{j+1} with respect to chart params."""
    chart, directions = _directions_for(d, chart)
    return directions + np.roll(directions, -1, axis=0)


def cfim(photons: int, nodes: int, phases, chart: Chart | None = None) -> FisherMatrix:
    """Classical Fisher matrix of the paired measurement in a given chart.

    Uses the analytically collapsed kernel, so the result is exact at every
    phase point including those where some outcomes have probability zero,
    and is independent of the phases for any fixed linear chart.
    """
    _check_counts(photons, nodes)
    phi = phase_vector(phases, nodes)
    chart, _ = _directions_for(nodes, chart)
    grads = pair_sum_gradients(nodes, chart)
    entries = (photons**2 / (4.0 * nodes)) * grads.T @ grads
    entries = 0.5 * (entries + entries.T)
    return FisherMatrix(entries, "classical", chart, photons, nodes, phi)


def cfim_brute_force_oracle(
    photons: int, nodes: int, phases, chart: Chart | None = None, step: float = 1e-6
) -> FisherMatrix:
    """Independent cross-check: literal sum over outcomes with numerical dP.

    Computes sum_o (1/P_o) (dP_o/dm) (dP_o/dn) with central-difference
    probability derivatives.  Requires every outcome probability to exceed
    1e-8 so the quotient is well conditioned.
    """
    if not 0 < step < 1e-2:
        raise ValidationError(f"finite-difference step must be in (0, 1e-2), got {step}")
    phi = phase_vector(phases, nodes)
    chart, directions = _directions_for(nodes, chart)
    base = outcome_distribution(photons, nodes, phi).as_array()
    lowest = float(np.min(base))
    if lowest <= 1e-8:
        raise ValidationError(
            f"brute-force Fisher sum needs all outcome probabilities > 1e-8; "
            f"smallest is {lowest:.3e}"
        )
    derivs = []
    for m in range(chart.size):
        shift = step * directions[:, m]
        plus = outcome_distribution(photons, nodes, phi + shift).as_array()
        minus = outcome_distribution(photons, nodes, phi - shift).as_array()
        derivs.append((plus - minus) / (2.0 * step))
    k = chart.size
    entries = np.empty((k, k))
    for m in range(k):
        for n in range(m, k):
            value = float(np.sum(derivs[m] * derivs[n] / base))
            entries[m, n] = value
            entries[n, m] = value
    return FisherMatrix(entries, "classical", chart, photons, nodes, phi)
