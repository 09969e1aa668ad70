"""The cross-oracle verification suite behind `multiperiod verify`."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Tuple

import numpy as np
from rich.table import Table

from multiperiod.kitaev import (
    KitaevParams,
    bdg_diagonalize,
    bdg_matrix,
    jordan_wigner_check,
)
from multiperiod.qubit_floquet import (
    PulseTrain,
    RwaQubit,
    closed_form_quasienergy,
    floquet_eigensystem,
    lab_frame_protocol_population,
    lab_frame_quasienergy,
    monodromy_matrix,
    population_period,
    quasienergy_mismatch,
    ramsey_population,
    resonant_population,
)
from multiperiod.logs import checks_table
from multiperiod.runner import CheckResult, evaluate_check
from multiperiod.spin_chain import (
    ChainParams,
    build_rwa_chain_hamiltonian,
    parity_crossings,
    parity_operator,
    site_operator,
    stroboscopic_observables,
    two_qubit_eigensystem,
)

SEED = 20240611
QUBIT_DRAWS = 1000
CHAIN_DRAWS = 200
FIG1_OMEGAS = (2.0, 1.0, 0.5, 0.05)

Verifier = Callable[[float | None], List[CheckResult]]


@dataclass(frozen=True)
class VerificationSummary:
    results: List[CheckResult]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def failures(self) -> List[CheckResult]:
        return [result for result in self.results if result.failed]

    def table(self) -> Table:
        return checks_table(self.results, "multiperiod verification")


def _random_qubit(rng: np.random.Generator) -> Tuple[RwaQubit, float, float]:
    T = rng.uniform(0.5, 2.0)
    q = RwaQubit.from_kick(
        rng.uniform(0, 4 * math.pi / T), rng.uniform(0, 4 * math.pi), rng.uniform(0, math.pi)
    )
    return q, T, rng.uniform(0.05, 0.95) * T


def verify_single_qubit(tol: float | None) -> List[CheckResult]:
    rng = np.random.default_rng(SEED)
    closed, unitarity, independence = [], [], []
    for _ in range(QUBIT_DRAWS):
        q, T, t0 = _random_qubit(rng)
        pair = floquet_eigensystem(q, T, t0)
        closed.append(quasienergy_mismatch(pair.eps, closed_form_quasienergy(q, T), T) * T)

        U = monodromy_matrix(q, T, t0)
        unitarity.append(
            max(
                float(np.abs(U.conj().T @ U - np.eye(2)).max()),
                abs(np.linalg.det(U) - 1),
            )
        )

        other = floquet_eigensystem(q, T, T - t0)
        independence.append(quasienergy_mismatch(pair.eps, other.eps, T) * T)

    return [
        evaluate_check("closed-form", closed, tol, f"{QUBIT_DRAWS} random (Omega, g, theta, T)"),
        evaluate_check("unitarity", unitarity, tol, "monodromy U^+ U = 1, det U = 1"),
        evaluate_check("t0-independence", independence, tol, "t0 and T - t0"),
    ]


def verify_brillouin_folding(tol: float | None) -> List[CheckResult]:
    rng = np.random.default_rng(SEED + 1)
    residuals = []
    for _ in range(QUBIT_DRAWS):
        T = rng.uniform(0.5, 2.0)
        eps = rng.uniform(-math.pi / T, math.pi / T)
        once = lab_frame_quasienergy(eps, T, 1)
        twice = lab_frame_quasienergy(once, T, 1)
        outside = max(0.0, abs(once) - math.pi / T)
        residuals.append(
            max(abs(twice - eps), abs(lab_frame_quasienergy(eps, T, 2) - eps), outside) * T
        )
    return [evaluate_check("brillouin-folding", residuals, tol, "odd rule applied twice")]


def verify_fig1_ordering(tol: float | None) -> List[CheckResult]:
    levels = [
        closed_form_quasienergy(RwaQubit.from_kick(Omega, 2 * math.pi, math.pi / 4), 1.0)[0]
        for Omega in FIG1_OMEGAS
    ]
    ordered = bool(np.all(np.diff(levels) > 0))
    return [
        evaluate_check(
            "fig1-ordering",
            [0.0 if ordered else 1.0],
            tol,
            "eps1 bottom to top for Omega T = 2, 1, 0.5, 0.05 at F1 = 2 pi",
        )
    ]


def verify_period_protocols(tol: float | None) -> List[CheckResult]:
    mismatches = 0
    for N in range(2, 9):
        for M in range(1, N):
            if math.gcd(M, N) != 1:
                continue
            k = np.arange(3 * N)
            area = 2 * math.pi * M / N
            for population in (ramsey_population, resonant_population):
                if population_period(population(area, k), tol=1e-12) != N:
                    mismatches += 1
    return [
        evaluate_check(
            "period", [float(mismatches)], tol, "Ramsey and resonant, 2 pi M / N, N <= 8"
        )
    ]


def verify_lab_frame(tol: float | None) -> List[CheckResult]:
    # omega0 T = 200 pi with a pulse smooth on the carrier scale
    p = PulseTrain(
        omega0=2 * math.pi, omegaF=2 * math.pi, periods_per_T=100, F1=math.pi / 2, sigma=3.0
    )
    residual = abs(
        lab_frame_protocol_population(p, "resonant", 2, dt=0.04)
        - float(resonant_population(p.F1, 2))
    )
    return [evaluate_check("lab-frame", [residual], tol, "resonant protocol, k = 2")]


def verify_two_qubit_crossing(tol: float | None) -> List[CheckResult]:
    mu, J, F_star = 0.6, 1.0, 0.8
    c = ChainParams.from_rotating_frame(mu, J, 0.0, L=2)
    crossings = [
        crossing
        for crossing in parity_crossings(c, np.linspace(0.51, 1.11, 7))
        if abs(crossing.F - F_star) < 1e-3
    ]
    location = [abs(crossing.F - F_star) for crossing in crossings] or [math.inf]
    gaps = [crossing.gap for crossing in crossings] or [math.inf]

    solution = two_qubit_eigensystem(mu, F_star, J)
    psi = (solution.states[:, 0] + solution.states[:, 3]) / math.sqrt(2)
    series = stroboscopic_observables(
        ChainParams.from_rotating_frame(mu, J, F_star, L=2), psi, site_operator(2, 0, "x"), 12
    )
    alternation = float(np.abs(series[2:] - series[:-2]).max())
    if abs(series[1] - series[0]) < 1e-6:
        alternation = math.inf

    return [
        evaluate_check(
            "two-qubit-crossing",
            location,
            tol,
            f"{len(crossings)} even/odd crossings at mu = 0.6 J",
        ),
        evaluate_check("crossing-gap", gaps, tol, "no anticrossing"),
        evaluate_check("period-2T", [alternation], tol, "sigma^x_1 on (psi_1 + psi_4)/sqrt 2"),
    ]


def _random_chain(rng: np.random.Generator) -> ChainParams:
    L = int(rng.integers(2, 9))
    mu = rng.uniform(-2, 2) if rng.random() < 0.5 else rng.uniform(-2, 2, L)
    J = rng.uniform(-1.5, 1.5, L - 1)
    F = rng.uniform(-1.5, 1.5, L - 1)
    return ChainParams.from_rotating_frame(mu, J, F, L=L)


def verify_chain(tol: float | None) -> List[CheckResult]:
    rng = np.random.default_rng(SEED + 2)
    reports, commutation = [], []
    for _ in range(CHAIN_DRAWS):
        c = _random_chain(rng)
        reports.append(jordan_wigner_check(c, tol=tol or 1e-9))

        H = build_rwa_chain_hamiltonian(c)
        P = parity_operator(c.L)
        commutation.append(float(abs(P @ H - H @ P).max()))

    failing = [report for report in reports if not report.passed]
    detail = (
        failing[0].format_diff()
        if failing
        else f"{CHAIN_DRAWS} clean and disordered, L <= 8"
    )
    return [
        evaluate_check(
            "jordan-wigner", [report.max_residual for report in reports], tol, detail
        ),
        evaluate_check("parity-commutation", commutation, tol, "[P, H] = 0"),
    ]


def verify_particle_hole(tol: float | None) -> List[CheckResult]:
    rng = np.random.default_rng(SEED + 3)
    residuals = []
    for _ in range(50):
        L = int(rng.integers(2, 41))
        p = KitaevParams(
            rng.uniform(-3, 3, L), rng.uniform(-1.5, 1.5, L - 1), rng.uniform(-1.5, 1.5, L - 1)
        )
        spec = bdg_diagonalize(p)
        full = np.linalg.eigvalsh(bdg_matrix(p))
        expected = np.concatenate([-spec.energies[::-1], spec.energies])
        residuals.append(float(np.abs(full - expected).max() / max(spec.norm, 1.0)))
    return [evaluate_check("particle-hole", residuals, tol, "BdG spectrum {+-eps}")]


def verify_fig3_thresholds(tol: float | None) -> List[CheckResult]:
    mu_values = np.linspace(-0.99, 0.99, 199)
    results, ratios = [], []
    for F in (0.3, 1.2):
        spectra = [bdg_diagonalize(KitaevParams.uniform(16, mu, 1.0, F)) for mu in mu_values]
        results.append(
            evaluate_check(
                f"fig3-threshold-F{F}",
                [spec.energies[0] for spec in spectra],
                tol,
                "L = 16, |mu/J| < 1, published bound",
            )
        )
        ratios.extend(spec.energies[0] / spec.energies[1] for spec in spectra)
    results.append(
        evaluate_check("edge-gap-ratio", ratios, tol, "eps1/eps2, L = 16, F/J = 0.3, 1.2")
    )
    return results


VERIFIERS: List[Tuple[str, Verifier]] = [
    ("closed form vs monodromy", verify_single_qubit),
    ("Brillouin folding", verify_brillouin_folding),
    ("quasienergy ordering", verify_fig1_ordering),
    ("period-N protocols", verify_period_protocols),
    ("lab-frame integrator", verify_lab_frame),
    ("two-qubit crossing", verify_two_qubit_crossing),
    ("ED vs BdG", verify_chain),
    ("particle-hole symmetry", verify_particle_hole),
    ("edge-mode thresholds", verify_fig3_thresholds),
]


def verify_all(
    tol: float | None = None,
    progress: Callable[[Iterable], Iterable] | None = None,
) -> VerificationSummary:
    """Run every cross-oracle check; `tol` replaces the numerical tolerances."""
    verifiers: Iterable[Tuple[str, Verifier]] = VERIFIERS
    if progress is not None:
        verifiers = progress(verifiers)

    results = []
    for _, verifier in verifiers:
        results.extend(verifier(tol))
    return VerificationSummary(results)
