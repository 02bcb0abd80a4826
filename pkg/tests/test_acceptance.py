"""End-to-end acceptance checks for the toolkit, one test per criterion."""

import json
import time

import numpy as np

from ghzsense.bounds import exact_crb, weak_crb
from ghzsense.cli import main
from ghzsense.measurement import cfim, cfim_brute_force_oracle, outcome_distribution
from ghzsense.montecarlo import crb_saturation_experiment
from ghzsense.qfim import (
    Chart,
    qfim_closed_form_original,
    qfim_finite_difference_oracle,
    qfim_pure,
    rank_and_nullspace,
)
from ghzsense.reparam import build_mc, build_orthogonal_d4, pushforward_fisher

PHOTON_GRID = (2, 4, 6)
NODE_GRID = (4, 6, 8)

TWO_PHOTON_FOUR_NODE = np.array(
    [
        [0.75, 0.25, -0.25, 0.25],
        [0.25, 0.75, 0.25, -0.25],
        [-0.25, 0.25, 0.75, 0.25],
        [0.25, -0.25, 0.25, 0.75],
    ]
)


def test_criterion_1_frozen_closed_form_reproduction(acceptance_report):
    started = time.perf_counter()
    matrix = qfim_pure(2, 4, np.zeros(4))
    elapsed = time.perf_counter() - started
    gap = float(np.max(np.abs(matrix.entries - TWO_PHOTON_FOUR_NODE)))
    ok = gap <= 1e-10 and elapsed < 1.0
    acceptance_report(
        1, ok, f"two-photon four-node matrix, max |delta| = {gap:.3e}, {elapsed:.3f} s"
    )


def test_criterion_2_general_closed_form_and_phase_independence(acceptance_report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for photons in PHOTON_GRID:
        for nodes in NODE_GRID:
            closed = qfim_closed_form_original(photons, nodes).entries
            at_zero = qfim_pure(photons, nodes, np.zeros(nodes)).entries
            at_random = qfim_pure(photons, nodes, rng.uniform(-2, 2, nodes)).entries
            worst = max(
                worst,
                float(np.max(np.abs(at_zero - closed))),
                float(np.max(np.abs(at_random - closed))),
            )
    ok = worst <= 1e-10
    acceptance_report(
        2, ok, f"9 geometries at zero and random phases, max |delta| = {worst:.3e}"
    )


def test_criterion_3_alternating_direction_singularity(acceptance_report):
    worst_residual = 0.0
    ranks_ok = True
    for builder, kind in ((qfim_pure, "quantum"), (cfim, "classical")):
        for photons in PHOTON_GRID:
            for nodes in NODE_GRID:
                matrix = builder(photons, nodes, np.zeros(nodes))
                alternating = np.array([(-1.0) ** j for j in range(nodes)])
                worst_residual = max(
                    worst_residual,
                    float(np.linalg.norm(matrix.entries @ alternating)),
                )
                ranks_ok = ranks_ok and rank_and_nullspace(matrix).rank == nodes - 1
    ok = ranks_ok and worst_residual <= 1e-10
    acceptance_report(
        3,
        ok,
        "rank d-1 with alternating null vector for both matrix kinds, "
        f"max residual = {worst_residual:.3e}",
    )


def test_criterion_4_reduced_chart_reaches_heisenberg(acceptance_report):
    worst_diag = 0.0
    worst_cross = 0.0
    worst_qcrb = 0.0
    for photons in PHOTON_GRID:
        for nodes in NODE_GRID:
            base = qfim_pure(photons, nodes, np.zeros(nodes))
            reduced = pushforward_fisher(base, build_mc(nodes), drop_irrelevant=True)
            worst_diag = max(
                worst_diag, abs(reduced.entries[0, 0] - photons**2)
            )
            worst_cross = max(worst_cross, float(np.max(np.abs(reduced.entries[0, 1:]))))
            alpha = np.zeros(nodes - 1)
            alpha[0] = 1.0
            qcrb = float(np.sqrt(exact_crb(reduced, alpha)))
            worst_qcrb = max(worst_qcrb, abs(qcrb - 1.0 / photons))
    ok = worst_diag <= 1e-10 and worst_cross <= 1e-10 and worst_qcrb <= 1e-10
    acceptance_report(
        4,
        ok,
        f"average-phase diagonal N^2 (|delta| <= {worst_diag:.3e}), decoupled "
        f"(<= {worst_cross:.3e}), uncertainty bound 1/N (|delta| <= {worst_qcrb:.3e})",
    )


def test_criterion_5_four_node_orthogonal_chart(acceptance_report):
    rep = build_orthogonal_d4()
    quantum = pushforward_fisher(qfim_pure(2, 4, np.zeros(4)), rep, drop_irrelevant=True)
    classical = pushforward_fisher(cfim(2, 4, np.zeros(4)), rep, drop_irrelevant=True)
    gap_q = float(np.max(np.abs(quantum.entries - np.eye(3))))
    gap_c = float(np.max(np.abs(classical.entries - np.diag([1.0, 0.5, 0.5]))))
    half = np.array([0.5, 0.0, 0.0])  # the ring average is half of the first coordinate
    dev_q = abs(float(np.sqrt(exact_crb(quantum, half))) - 0.5)
    dev_c = abs(float(np.sqrt(exact_crb(classical, half))) - 0.5)
    ok = gap_q <= 1e-10 and gap_c <= 1e-10 and dev_q <= 1e-10 and dev_c <= 1e-10
    acceptance_report(
        5,
        ok,
        f"identity / diag(1, 1/2, 1/2) matrices (|delta| <= {max(gap_q, gap_c):.3e}), "
        f"both average-phase uncertainty bounds = 1/2 (|delta| <= {max(dev_q, dev_c):.3e})",
    )


def test_criterion_6_weak_versus_exact_bound(acceptance_report):
    rng = np.random.default_rng(60606)
    worst_gap = 0.0
    worst_eig = 0.0
    diag_ok = True
    for _ in range(1000):
        dim = int(rng.integers(2, 7))
        root = rng.normal(size=(dim, dim))
        matrix = root @ root.T + dim * 1e-3 * np.eye(dim)
        alpha = rng.normal(size=dim)
        weak = weak_crb(matrix, alpha)
        exact = exact_crb(matrix, alpha)
        worst_gap = min(worst_gap, exact - weak)
        _, vecs = np.linalg.eigh(matrix)
        eigvec = vecs[:, int(rng.integers(0, dim))]
        worst_eig = max(worst_eig, abs(weak_crb(matrix, eigvec) - exact_crb(matrix, eigvec)))
        diag_ok = diag_ok and 1.0 / matrix[0, 0] <= np.linalg.inv(matrix)[0, 0] + 1e-12
    classical = cfim(2, 4, np.zeros(4))
    alpha = np.full(4, 0.25)
    weak_avg = weak_crb(classical, alpha)
    reduced = pushforward_fisher(classical, build_mc(4), drop_irrelevant=True)
    exact_avg = exact_crb(reduced, np.array([1.0, 0.0, 0.0]))
    ghz_ok = abs(weak_avg - 0.25) <= 1e-12 and abs(exact_avg - 0.25) <= 1e-12
    ok = worst_gap >= -1e-12 and worst_eig <= 1e-10 and diag_ok and ghz_ok
    acceptance_report(
        6,
        ok,
        f"1000 random PD matrices: min(exact-weak) = {worst_gap:.3e}, eigenvector "
        f"equality gap <= {worst_eig:.3e}, diagonal inequality holds; ring-average "
        f"weak = {weak_avg:.6g} and exact = {exact_avg:.6g}",
    )


def test_criterion_7_oracle_equivalence(acceptance_report):
    rng = np.random.default_rng(70707)
    worst_quantum = 0.0
    for _ in range(20):
        nodes = int(rng.integers(3, 7))
        photons = int(rng.choice(PHOTON_GRID))
        phi = rng.uniform(-1.0, 1.0, nodes)
        size = int(rng.integers(2, nodes + 1))
        chart = Chart(
            "random",
            tuple(f"c{i}" for i in range(size)),
            rng.normal(size=(nodes, size)),
        )
        analytic = qfim_pure(photons, nodes, phi, chart)
        numeric = qfim_finite_difference_oracle(photons, nodes, phi, chart)
        worst_quantum = max(
            worst_quantum, float(np.max(np.abs(analytic.entries - numeric.entries)))
        )
    worst_classical = 0.0
    checked = 0
    while checked < 20:
        nodes = int(rng.integers(3, 7))
        photons = int(rng.choice(PHOTON_GRID))
        phi = rng.uniform(-0.8, 0.8, nodes)
        if float(outcome_distribution(photons, nodes, phi).as_array().min()) <= 1e-8:
            continue
        analytic = cfim(photons, nodes, phi)
        oracle = cfim_brute_force_oracle(photons, nodes, phi)
        worst_classical = max(
            worst_classical, float(np.max(np.abs(analytic.entries - oracle.entries)))
        )
        checked += 1
    ok = worst_quantum <= 1e-6 and worst_classical <= 1e-6
    acceptance_report(
        7,
        ok,
        f"20 random charts: quantum |delta| <= {worst_quantum:.3e}; 20 positive-"
        f"probability points: classical |delta| <= {worst_classical:.3e}",
    )


def test_criterion_8_monte_carlo_bound_saturation(acceptance_report):
    details = []
    ok = True
    for photons in (2, 4):
        started = time.perf_counter()
        report = crb_saturation_experiment(
            photons, 4, np.full(4, 0.1), 10**5, 200, 42
        )
        elapsed = time.perf_counter() - started
        scaled = report.var_theta1 * photons**2 * 10**5
        inside = 0.85 <= scaled <= 1.15
        ok = ok and inside and elapsed < 60.0
        details.append(f"N={photons}: Var*N^2*shots = {scaled:.4f} in {elapsed:.1f} s")
    acceptance_report(8, ok, "; ".join(details))


def test_criterion_9_byte_identical_reruns(acceptance_report, tmp_path, capsys):
    command_sets = {
        "qfim.json": ["qfim", "--N", "4", "--d", "6", "--phases", "uniform:0.2"],
        "cfim.csv": ["cfim", "--N", "2", "--d", "4", "--format", "csv"],
        "state.json": ["state", "--N", "2", "--d", "4", "--phases", "0.1,0.2,0.3,0.4"],
        "transform.json": ["transform", "--d", "6"],
        "bounds.json": ["bounds", "--N", "2", "--d", "4", "--chart", "mc"],
        "sweep.csv": ["sweep", "--N", "2,4,6", "--d", "4,6,8", "--format", "csv"],
        "sim.json": [
            "simulate", "--N", "2", "--d", "4",
            "--shots", "20000", "--replicates", "50", "--seed", "13",
        ],
        "sim.csv": [
            "simulate", "--N", "2", "--d", "4",
            "--shots", "20000", "--replicates", "50", "--seed", "13", "--format", "csv",
        ],
    }
    identical = True
    for name, argv in command_sets.items():
        first = tmp_path / "run1" / name
        second = tmp_path / "run2" / name
        assert main(argv + ["--output", str(first)]) == 0
        assert main(argv + ["--output", str(second)]) == 0
        identical = identical and first.read_bytes() == second.read_bytes()
        if name.startswith("sim") and name.endswith(".csv"):
            summary_a = first.with_name("sim-summary.csv")
            summary_b = second.with_name("sim-summary.csv")
            identical = identical and summary_a.read_bytes() == summary_b.read_bytes()
    capsys.readouterr()
    # JSON payloads also reparse to the same document
    doc = json.loads((tmp_path / "run1" / "qfim.json").read_text())
    identical = identical and "entries" in doc
    acceptance_report(
        9, identical, f"{len(command_sets)} command configurations rerun byte-identically"
    )
