"""
Free-fermion (Bogoliubov-de Gennes) treatment of the Kitaev chain.

The rotating-frame chain Hamiltonian maps under the Jordan-Wigner transformation
(string ordered from site 0, open boundary) onto

    H_K = sum_ij A_ij a_i^+ a_j + 1/2 sum_ij (B_ij a_i^+ a_j^+ + h.c.) + 1/2 sum_n mu_n

with A_nn = -mu_n, A_{n,n+1} = A_{n+1,n} = -J_n and B_{n,n+1} = -B_{n+1,n} = -F_n,
i.e. with the same mu, J and F as the spin chain. The quasiparticle energies are
the singular values of A - B, the ground energy is -1/2 sum of them and the
ground-state fermion parity is sgn det(A - B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np

from multiperiod.exceptions import CapacityError, InvariantError, PreconditionError
from multiperiod.spin_chain import ChainParams, chain_spectrum

JW_L_MAX = 10
MANY_BODY_L_MAX = 20
PRODUCT_SWITCH = 1e-4
PRODUCT_FLOOR = 1e-7
BOUNDARY_BAND = 1e-12
RESOLUTION_FLOOR = 1e-14
EDGE_THRESHOLD = 0.8

Method = Literal["auto", "product", "svd"]


class Phase(str, Enum):
    TOPOLOGICAL = "topological"
    TRIVIAL = "trivial"
    BOUNDARY = "boundary"


def _array(value, length: int, name: str) -> np.ndarray:
    array = np.broadcast_to(np.asarray(value, dtype=float), (length,)).copy()
    if not np.all(np.isfinite(array)):
        raise PreconditionError(f"{name} must be finite")
    return array


@dataclass(frozen=True, eq=False, init=False)
class KitaevParams:
    """Chemical potential per site, hopping and pairing per bond, open boundary."""

    mu: np.ndarray
    J: np.ndarray
    F_pair: np.ndarray

    def __init__(self, mu, J, F_pair, L: int | None = None):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if L is not None and mu.size == 1:
            mu = np.full(L, mu[0])
        L = mu.size
        if L < 2:
            raise PreconditionError(f"a Kitaev chain needs at least two sites, got L = {L}")

        object.__setattr__(self, "mu", _array(mu, L, "mu"))
        object.__setattr__(self, "J", _array(J, L - 1, "J"))
        object.__setattr__(self, "F_pair", _array(F_pair, L - 1, "F_pair"))

    @classmethod
    def uniform(cls, L: int, mu: float, J: float, F: float) -> KitaevParams:
        return cls(mu, J, F, L=L)

    @classmethod
    def from_chain(cls, c: ChainParams) -> KitaevParams:
        """The Jordan-Wigner image of a modulated qubit chain."""
        return cls(c.mu, c.J, c.F)

    @property
    def L(self) -> int:
        return self.mu.size

    @property
    def is_uniform(self) -> bool:
        return bool(
            np.all(self.mu == self.mu[0])
            and np.all(self.J == self.J[0])
            and np.all(self.F_pair == self.F_pair[0])
        )

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """The hopping block A (symmetric) and the pairing block B (antisymmetric)."""
        A = np.diag(-self.mu) + np.diag(-self.J, 1) + np.diag(-self.J, -1)
        B = np.diag(-self.F_pair, 1) - np.diag(-self.F_pair, -1)
        return A, B


@dataclass(frozen=True)
class BdgSpectrum:
    """Non-negative quasiparticle energies, ascending, with their mode vectors.

    Columns of `phi` and `psi` are the two Majorana components of each mode,
    u = (phi + psi)/2 and v = (phi - psi)/2.
    """

    energies: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    ground_parity: int
    norm: float

    @property
    def L(self) -> int:
        return self.energies.size

    @property
    def u(self) -> np.ndarray:
        return (self.phi + self.psi) / 2

    @property
    def v(self) -> np.ndarray:
        return (self.phi - self.psi) / 2

    @property
    def ground_energy(self) -> float:
        return -0.5 * float(np.sum(self.energies))

    @property
    def signed_splitting(self) -> float:
        """Lowest odd-parity minus lowest even-parity many-body energy."""
        return self.ground_parity * float(self.energies[0])

    def dump(self, path: str | Path) -> Path:
        """Write energies and the (u, v) blocks to an .npz archive; column m is mode m."""
        target = Path(path)
        np.savez(target, energies=self.energies, u=self.u, v=self.v)
        return target


@dataclass(frozen=True)
class JordanWignerReport:
    """Comparison of the BdG many-body reconstruction with spin exact diagonalization."""

    L: int
    tol: float
    sector_residuals: Dict[int, float]
    mismatches: List[Tuple[int, int, float, float]] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.sector_residuals.values())

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def format_diff(self) -> str:
        lines = [
            f"Jordan-Wigner check, L = {self.L}: max residual {self.max_residual:.3e} "
            f"(tol {self.tol:.1e})"
        ]
        for parity, index, ed, bdg in self.mismatches:
            lines.append(
                f"  parity {parity:+d} level {index}: ED {ed:.12g} vs BdG {bdg:.12g} "
                f"(diff {abs(ed - bdg):.3e})"
            )
        return "\n".join(lines)

    def raise_for_mismatch(self) -> None:
        if not self.passed:
            raise InvariantError(self.format_diff())


@dataclass(frozen=True)
class EdgeProfile:
    weights: np.ndarray
    localization_length: float
    edge_fraction: float
    end_ratio: float

    @property
    def is_edge(self) -> bool:
        return self.edge_fraction > EDGE_THRESHOLD


@dataclass(frozen=True)
class GapScan:
    L: np.ndarray
    eps1: np.ndarray
    signed: np.ndarray
    decay_rate: float
    r_squared: float
    sign_changes: int
    oscillating: bool


@dataclass(frozen=True)
class MuSweep:
    mu: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray
    signed: np.ndarray

    @property
    def sign_changes(self) -> int:
        signs = np.sign(self.signed[self.signed != 0])
        return int(np.count_nonzero(np.diff(signs)))


@dataclass(frozen=True)
class DisorderStats:
    seeds: Tuple[int, ...]
    eps1: np.ndarray
    localization_length: np.ndarray
    is_edge: np.ndarray
    eps1_quantiles: Dict[float, float]
    xi_quantiles: Dict[float, float]

    @property
    def unstable(self) -> bool:
        """The edge classification disagrees between seeds."""
        edges = int(np.count_nonzero(self.is_edge))
        return 0 < edges < len(self.seeds)


def bdg_matrix(p: KitaevParams) -> np.ndarray:
    """The 2L x 2L Bogoliubov-de Gennes matrix in the Nambu basis (a, a^+)."""
    A, B = p.matrices()
    return np.block([[A, B], [-B, -A]])


def _order_zero_modes(energies, phi, psi, norm) -> Tuple[np.ndarray, np.ndarray]:
    """Among degenerate zero modes, put the most edge-localized first."""
    zero = np.flatnonzero(energies <= RESOLUTION_FLOOR * max(norm, 1.0))
    if len(zero) < 2:
        return phi, psi

    L = phi.shape[0]
    quarter = max(1, L // 4)
    weights = 0.5 * (phi[:, zero] ** 2 + psi[:, zero] ** 2)
    edge = weights[:quarter].sum(axis=0) + weights[-quarter:].sum(axis=0)
    peak = np.argmax(weights, axis=0)
    order = zero[np.lexsort((peak, -edge))]

    phi, psi = phi.copy(), psi.copy()
    phi[:, zero], psi[:, zero] = phi[:, order], psi[:, order]
    return phi, psi


def bdg_diagonalize(p: KitaevParams, method: Method = "auto") -> BdgSpectrum:
    """Quasiparticle spectrum by the product method, with an SVD fallback near zero modes.

    Squaring the matrix loses the small energies, so "auto" switches to the
    singular-value decomposition of A - B once the lowest energy falls below
    1e-4 of the spectral norm, where the product error u*norm^2/(2 eps) stays
    below 1e-8 relative. "product" keeps the squared route down to 1e-7 of the
    norm; below that a mode is unresolved and its Majorana partner, hence the
    ground parity, is only available from the SVD.
    """
    A, B = p.matrices()
    M = A - B

    use_svd = method == "svd"
    if not use_svd:
        squares, phi = np.linalg.eigh(M @ M.T)
        energies = np.sqrt(np.clip(squares, 0.0, None))
        norm = float(energies[-1])
        switch = PRODUCT_SWITCH if method == "auto" else PRODUCT_FLOOR
        if energies[0] <= switch * norm:
            use_svd = True
        else:
            psi = (M.T @ phi) / energies

    if use_svd:
        left, singular, right_t = np.linalg.svd(M)
        energies = singular[::-1]
        phi = left[:, ::-1]
        psi = right_t[::-1].T
        norm = float(singular[0])

    phi, psi = _order_zero_modes(energies, phi, psi, norm)
    # M = phi diag(energies) psi^T, so sgn det M is the product of the two orientations
    ground_parity = int(np.sign(np.linalg.det(phi) * np.linalg.det(psi)))

    return BdgSpectrum(
        energies=energies, phi=phi, psi=psi, ground_parity=ground_parity, norm=norm
    )


def hopping_spectrum(p: KitaevParams) -> np.ndarray:
    """Eigenvalues of the single-particle hopping matrix A, ascending."""
    A, _ = p.matrices()
    return np.linalg.eigvalsh(A)


def many_body_levels(spec: BdgSpectrum) -> Tuple[np.ndarray, np.ndarray]:
    """All 2^L many-body energies with their fermion parities, sorted by energy."""
    if spec.L > MANY_BODY_L_MAX:
        raise CapacityError(
            f"Error: L = {spec.L} exceeds the many-body reconstruction limit {MANY_BODY_L_MAX}"
        )

    subsets = np.arange(2**spec.L)
    occupations = (subsets[:, None] >> np.arange(spec.L)) & 1
    energies = spec.ground_energy + occupations @ spec.energies
    parities = spec.ground_parity * np.where(occupations.sum(axis=1) % 2 == 0, 1, -1)

    order = np.argsort(energies, kind="stable")
    return energies[order], parities[order]


def jordan_wigner_check(c: ChainParams, tol: float = 1e-9) -> JordanWignerReport:
    """Compare the fermionic many-body spectrum with spin exact diagonalization, per parity."""
    if c.L > JW_L_MAX:
        raise CapacityError(
            f"Error: L = {c.L} exceeds the Jordan-Wigner check limit L = {JW_L_MAX}"
        )

    spin = chain_spectrum(c)
    levels, parities = many_body_levels(bdg_diagonalize(KitaevParams.from_chain(c)))

    residuals: Dict[int, float] = {}
    mismatches = []
    for parity in (1, -1):
        ed = spin.sector(parity)
        fermion = np.sort(levels[parities == parity])
        if ed.size != fermion.size:
            residuals[parity] = math.inf
            continue

        difference = np.abs(ed - fermion)
        residuals[parity] = float(difference.max())
        for index in np.flatnonzero(difference > tol):
            mismatches.append((parity, int(index), float(ed[index]), float(fermion[index])))

    return JordanWignerReport(
        L=c.L, tol=tol, sector_residuals=residuals, mismatches=mismatches
    )


def _localization_length(amplitudes: np.ndarray) -> float:
    half = np.abs(amplitudes[: math.ceil(amplitudes.size / 2)])
    resolved = half > 1e-12 * half.max()
    if np.count_nonzero(resolved) < 2:
        return 0.0

    sites = np.arange(half.size)[resolved]
    slope, _ = np.polyfit(sites, np.log(half[resolved]), 1)
    return -1.0 / slope if slope < 0 else math.inf


def edge_mode_profile(spec: BdgSpectrum) -> EdgeProfile:
    """Per-site Majorana weight of the lowest mode and its localization at the chain ends."""
    phi, psi = spec.phi[:, 0], spec.psi[:, 0]
    weights = 0.5 * (phi**2 + psi**2)

    # Fit the Majorana component that lives on the left end
    left = phi if phi[0] ** 2 >= psi[0] ** 2 else psi
    quarter = max(1, spec.L // 4)
    left_weight = float(weights[:quarter].sum())
    right_weight = float(weights[-quarter:].sum())

    return EdgeProfile(
        weights=weights,
        localization_length=_localization_length(left),
        edge_fraction=left_weight + right_weight,
        end_ratio=left_weight / right_weight if right_weight > 0 else math.inf,
    )


def phase_classifier(p: KitaevParams, band: float = BOUNDARY_BAND) -> Phase:
    """Topological for |mu| < 2|J| in a uniform chain."""
    if not p.is_uniform:
        raise PreconditionError(
            "phase_classifier needs uniform parameters; for disordered chains use a "
            "spectral gap scan (gap_scaling_scan or disorder_ensemble)"
        )

    distance = abs(p.mu[0]) - 2 * abs(p.J[0])
    if abs(distance) < band:
        return Phase.BOUNDARY
    if distance > 0:
        return Phase.TRIVIAL
    # Without pairing the |mu| < 2|J| chain is a gapless metal
    if p.F_pair[0] == 0:
        return Phase.BOUNDARY
    return Phase.TOPOLOGICAL


def _regular_signs(L: np.ndarray, signs: np.ndarray) -> bool:
    """Signs that are constant or strictly alternate with the parity of L."""
    alternating = signs * np.where(L % 2 == 0, 1, -1)
    return bool(np.all(signs == signs[0]) or np.all(alternating == alternating[0]))


def gap_scaling_scan(J: float, F: float, mu: float, L_list: Sequence[int]) -> GapScan:
    """Lowest quasiparticle energy against chain length, with an exponential fit."""
    lengths = np.asarray(sorted(L_list), dtype=int)
    spectra = [bdg_diagonalize(KitaevParams.uniform(int(L), mu, J, F)) for L in lengths]
    eps1 = np.array([spec.energies[0] for spec in spectra])
    signed = np.array([spec.signed_splitting for spec in spectra])
    floor = np.array([RESOLUTION_FLOOR * max(spec.norm, 1.0) for spec in spectra])

    resolved = eps1 > floor
    decay_rate, r_squared = math.nan, math.nan
    if not np.any(resolved):
        decay_rate = math.inf
    elif np.count_nonzero(resolved) >= 2:
        x, y = lengths[resolved], np.log(eps1[resolved])
        slope, intercept = np.polyfit(x, y, 1)
        decay_rate = -float(slope)
        residual = np.sum((y - (slope * x + intercept)) ** 2)
        total = np.sum((y - y.mean()) ** 2)
        r_squared = 1.0 - residual / total if total > 0 else 1.0

    signs = np.sign(signed[resolved])
    sign_changes = int(np.count_nonzero(np.diff(signs)))
    oscillating = signs.size > 2 and not _regular_signs(lengths[resolved], signs)

    return GapScan(
        L=lengths,
        eps1=eps1,
        signed=signed,
        decay_rate=decay_rate,
        r_squared=r_squared,
        sign_changes=sign_changes,
        oscillating=oscillating,
    )


def mu_sweep(
    L: int, J: float, F: float, mu_values: Sequence[float], method: Method = "auto"
) -> MuSweep:
    """The two lowest quasiparticle energies along a chemical-potential sweep."""
    mu = np.asarray(mu_values, dtype=float)
    spectra = [bdg_diagonalize(KitaevParams.uniform(L, m, J, F), method) for m in mu]
    return MuSweep(
        mu=mu,
        eps1=np.array([spec.energies[0] for spec in spectra]),
        eps2=np.array([spec.energies[1] for spec in spectra]),
        signed=np.array([spec.signed_splitting for spec in spectra]),
    )


QUANTILES = (0.1, 0.5, 0.9)


def disorder_ensemble(
    base: KitaevParams,
    site_sigma: float,
    bond_sigma: float,
    seeds: Sequence[int],
    pair_sigma: float = 0.0,
) -> DisorderStats:
    """Gaussian disorder on mu per site and on J and F_pair per bond, one draw per seed."""
    if site_sigma < 0 or bond_sigma < 0 or pair_sigma < 0:
        raise PreconditionError("disorder strengths must be non-negative")
    if not seeds:
        raise PreconditionError("at least one seed is required")

    eps1, xi, edge = [], [], []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        mu = base.mu + site_sigma * rng.standard_normal(base.L)
        J = base.J + bond_sigma * rng.standard_normal(base.L - 1)
        F_pair = base.F_pair + pair_sigma * rng.standard_normal(base.L - 1)
        spec = bdg_diagonalize(KitaevParams(mu, J, F_pair))
        profile = edge_mode_profile(spec)

        eps1.append(spec.energies[0])
        xi.append(profile.localization_length)
        edge.append(profile.is_edge)

    eps1_array, xi_array = np.array(eps1), np.array(xi)
    return DisorderStats(
        seeds=tuple(int(seed) for seed in seeds),
        eps1=eps1_array,
        localization_length=xi_array,
        is_edge=np.array(edge),
        eps1_quantiles={
            q: float(np.quantile(eps1_array, q, method="nearest")) for q in QUANTILES
        },
        xi_quantiles={
            q: float(np.quantile(xi_array, q, method="nearest")) for q in QUANTILES
        },
    )
