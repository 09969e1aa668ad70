"""
Exact diagonalization of the resonantly modulated qubit chain in the rotating frame.

Basis states are integers with a little-endian site-to-bit map: site n is bit n,
and a set bit means the qubit is excited (sigma_z = +1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Sequence, Tuple

import numpy as np
import scipy.sparse
from scipy.optimize import brentq

from multiperiod.exceptions import CapacityError, PreconditionError, RwaValidityWarning

L_MAX = 14
RWA_COUPLING_LIMIT = 0.1

Pauli = Literal["x", "y", "z"]


def _per_bond(value, L: int, name: str) -> np.ndarray:
    array = np.broadcast_to(np.asarray(value, dtype=float), (L - 1,)).copy()
    if not np.all(np.isfinite(array)):
        raise PreconditionError(f"{name} must be finite")
    return array


@dataclass(frozen=True, eq=False, init=False)
class ChainParams:
    """An open chain of qubits with xx coupling modulated at omegaF close to 2 omega0.

    Scalars broadcast; per-site `omega0` and per-bond couplings describe a
    disordered chain.
    """

    omega0: np.ndarray
    Jxx0: np.ndarray
    Jyy: np.ndarray
    F_amp: np.ndarray
    omegaF: float

    def __init__(self, omega0, Jxx0, Jyy, F_amp, omegaF: float, L: int | None = None):
        frequencies = np.atleast_1d(np.asarray(omega0, dtype=float))
        if L is not None and frequencies.size == 1:
            frequencies = np.full(L, frequencies[0])
        L = frequencies.size
        if L < 2:
            raise PreconditionError(f"a chain needs at least two qubits, got L = {L}")
        if not np.all(np.isfinite(frequencies)):
            raise PreconditionError("omega0 must be finite")

        object.__setattr__(self, "omega0", frequencies)
        object.__setattr__(self, "Jxx0", _per_bond(Jxx0, L, "Jxx0"))
        object.__setattr__(self, "Jyy", _per_bond(Jyy, L, "Jyy"))
        object.__setattr__(self, "F_amp", _per_bond(F_amp, L, "F_amp"))
        object.__setattr__(self, "omegaF", float(omegaF))

        largest = max(
            np.max(np.abs(self.Jxx0)), np.max(np.abs(self.Jyy)), np.max(np.abs(self.F_amp))
        )
        if largest > RWA_COUPLING_LIMIT * np.min(np.abs(frequencies)):
            warnings.warn(
                f"coupling {largest:.3g} is not small compared to omega0",
                RwaValidityWarning,
                stacklevel=2,
            )

    @classmethod
    def from_rotating_frame(
        cls, mu, J, F, L: int | None = None, omegaF: float = 200.0
    ) -> ChainParams:
        """Build a chain whose rotating-frame Hamiltonian has the given mu, J and F."""
        frequencies = omegaF / 2 - np.asarray(mu, dtype=float)
        return cls(omega0=frequencies, Jxx0=J, Jyy=0.0, F_amp=F, omegaF=omegaF, L=L)

    @property
    def L(self) -> int:
        return self.omega0.size

    @property
    def mu(self) -> np.ndarray:
        """Per-site frequency detuning, the fermion chemical potential."""
        return self.omegaF / 2 - self.omega0

    @property
    def J(self) -> np.ndarray:
        return self.Jxx0 + self.Jyy

    @property
    def F(self) -> np.ndarray:
        return self.F_amp

    @property
    def T(self) -> float:
        """The modulation period."""
        return 2 * math.pi / self.omegaF


@dataclass(frozen=True)
class ChainSpectrum:
    eigenvalues: np.ndarray
    parities: np.ndarray
    eigenvectors: np.ndarray

    def sector(self, parity: int) -> np.ndarray:
        """Sorted eigenvalues of one parity sector."""
        return np.sort(self.eigenvalues[self.parities == parity])


@dataclass(frozen=True)
class TwoQubitSolution:
    """Analytic eigensystem of two coupled qubits; `states[:, j]` is psi_{j+1}."""

    eps: Tuple[float, float, float, float]
    phi: Tuple[float, float]
    states: np.ndarray

    @property
    def parities(self) -> Tuple[int, int, int, int]:
        return 1, 1, -1, -1


@dataclass(frozen=True)
class ParityCrossing:
    F: float
    energy: float
    gap: float
    even_level: int
    odd_level: int


def _basis(L: int) -> np.ndarray:
    return np.arange(2**L, dtype=np.int64)


def _check_capacity(L: int, L_max: int) -> None:
    if L > L_max:
        raise CapacityError(
            f"Error: L = {L} exceeds the exact-diagonalization limit L_max = {L_max}"
        )


def excitation_count(L: int) -> np.ndarray:
    """Number of excited qubits of every basis state."""
    states = _basis(L)
    count = np.zeros_like(states)
    for site in range(L):
        count += (states >> site) & 1
    return count


def parity_eigenvalues(L: int) -> np.ndarray:
    """The diagonal of P, (-1)^(number of excited qubits)."""
    if L < 1:
        raise PreconditionError(f"L must be positive, got {L}")
    return np.where(excitation_count(L) % 2 == 0, 1, -1)


def parity_operator(L: int) -> scipy.sparse.csr_matrix:
    """The parity operator P = exp[-i pi/2 sum_n (sigma_n^z + I_n)]."""
    return scipy.sparse.diags(parity_eigenvalues(L).astype(float)).tocsr()


def build_rwa_chain_hamiltonian(
    c: ChainParams, L_max: int = L_MAX
) -> scipy.sparse.csr_matrix:
    """The rotating-frame chain Hamiltonian as a sparse real symmetric matrix.

    sigma^+- = sigma^x +- i sigma^y without the factor 1/2, so every bond flip
    carries -J (01 <-> 10) or -F (00 <-> 11). The identity shift -(omegaF/4) sum I_n
    is dropped.
    """
    L = c.L
    _check_capacity(L, L_max)

    states = _basis(L)
    spins = np.stack([(states >> site) & 1 for site in range(L)])

    rows = [states]
    cols = [states]
    data = [-0.5 * ((2 * spins - 1) * c.mu[:, None]).sum(axis=0)]

    for bond in range(L - 1):
        mask = (1 << bond) | (1 << (bond + 1))
        aligned = spins[bond] == spins[bond + 1]
        rows.append(states)
        cols.append(states ^ mask)
        data.append(np.where(aligned, -c.F[bond], -c.J[bond]))

    dimension = 2**L
    return scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dimension, dimension),
    ).tocsr()


def chain_spectrum(c: ChainParams, L_max: int = L_MAX) -> ChainSpectrum:
    """Diagonalize the chain Hamiltonian block by block in the parity sectors."""
    H = build_rwa_chain_hamiltonian(c, L_max=L_max)
    parity = parity_eigenvalues(c.L)

    eigenvalues, parities, vectors = [], [], []
    for sign in (1, -1):
        indices = np.flatnonzero(parity == sign)
        block = H[indices][:, indices].toarray()
        values, block_vectors = np.linalg.eigh(block)

        embedded = np.zeros((2**c.L, len(indices)), dtype=complex)
        embedded[indices] = block_vectors
        eigenvalues.append(values)
        parities.append(np.full(len(indices), sign))
        vectors.append(embedded)

    eigenvalues = np.concatenate(eigenvalues)
    order = np.argsort(eigenvalues, kind="stable")
    return ChainSpectrum(
        eigenvalues=eigenvalues[order],
        parities=np.concatenate(parities)[order],
        eigenvectors=np.concatenate(vectors, axis=1)[:, order],
    )


def _mixing_angle(mu: float, F: float, eps: float) -> float:
    if F != 0:
        return math.atan((mu - eps) / F)
    # Unmodulated limit: the state is |00> (energy +mu) or |11> (energy -mu)
    return 0.0 if math.isclose(eps, mu) else math.pi / 2


def two_qubit_eigensystem(mu: float, F: float, J: float) -> TwoQubitSolution:
    """Analytic eigenpairs of the two-qubit rotating-frame Hamiltonian."""
    root = math.hypot(mu, F)
    eps = (root, -root, -J, J)
    phi = (_mixing_angle(mu, F, eps[0]), _mixing_angle(mu, F, eps[1]))
    if F == 0 and mu == 0:
        phi = (0.0, math.pi / 2)

    states = np.zeros((4, 4), dtype=complex)
    for column, angle in enumerate(phi):
        states[0b00, column] = math.cos(angle)
        states[0b11, column] = math.sin(angle)
    states[[0b01, 0b10], 2] = 1 / math.sqrt(2)
    states[0b01, 3], states[0b10, 3] = 1 / math.sqrt(2), -1 / math.sqrt(2)

    return TwoQubitSolution(eps=eps, phi=phi, states=states)


def crossing_amplitude(mu: float, J: float) -> float | None:
    """Modulation amplitude at which opposite-parity levels cross, if |mu| < |J|."""
    if abs(mu) >= abs(J):
        return None
    return math.sqrt(J**2 - mu**2)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def site_operator(L: int, site: int, pauli: Pauli) -> scipy.sparse.csr_matrix:
    """A single-site Pauli operator in the little-endian chain basis.

    The local basis is ordered (bit 0, bit 1) = (|0>, |1>).
    """
    if not 0 <= site < L:
        raise PreconditionError(f"site {site} is outside a chain of length {L}")

    operator = scipy.sparse.identity(1, dtype=complex, format="csr")
    for n in reversed(range(L)):
        local = _PAULI[pauli] if n == site else np.eye(2)
        operator = scipy.sparse.kron(operator, local, format="csr")
    return operator


def stroboscopic_observables(
    c: ChainParams,
    psi_init: Sequence[complex],
    observable,
    k_max: int,
    L_max: int = L_MAX,
) -> np.ndarray:
    """Lab-frame expectation values <O>(kT), k = 0..k_max, T = 2 pi / omegaF.

    Over a period the frame transformation contributes exactly the parity
    operator, so psi_lab(kT) = P^k exp(-i H_RWA kT) psi_init.
    """
    psi = np.asarray(psi_init, dtype=complex)
    if not math.isclose(np.linalg.norm(psi), 1.0, abs_tol=1e-10):
        raise PreconditionError("the initial state must be normalized")

    O = observable.toarray() if scipy.sparse.issparse(observable) else np.asarray(observable)
    if not np.allclose(O, O.conj().T, atol=1e-12):
        raise PreconditionError("the observable must be Hermitian")

    spectrum = chain_spectrum(c, L_max=L_max)
    parity = parity_eigenvalues(c.L)
    coefficients = spectrum.eigenvectors.conj().T @ psi

    series = np.empty(k_max + 1)
    for k in range(k_max + 1):
        rotating = spectrum.eigenvectors @ (
            np.exp(-1j * spectrum.eigenvalues * k * c.T) * coefficients
        )
        lab = parity**k * rotating
        series[k] = np.vdot(lab, O @ lab).real
    return series


def _sector_levels(c: ChainParams) -> Tuple[np.ndarray, np.ndarray]:
    spectrum = chain_spectrum(c)
    return spectrum.sector(1), spectrum.sector(-1)


def parity_crossings(
    c: ChainParams, F_values: Sequence[float], xtol: float = 1e-14
) -> List[ParityCrossing]:
    """Locate every crossing of an even-parity and an odd-parity level along an F scan.

    The modulation amplitude of `c` is replaced by each value of `F_values`
    (uniformly on all bonds); brackets are refined with Brent's method.
    """

    def with_F(F: float) -> ChainParams:
        return ChainParams(c.omega0, c.Jxx0, c.Jyy, F, c.omegaF)

    def difference(F: float, i: int, j: int) -> float:
        even, odd = _sector_levels(with_F(F))
        return even[i] - odd[j]

    grid = np.asarray(F_values, dtype=float)
    levels = [_sector_levels(with_F(F)) for F in grid]

    crossings = []
    for (F_a, (even_a, odd_a)), (F_b, (even_b, odd_b)) in zip(
        zip(grid, levels), zip(grid[1:], levels[1:])
    ):
        gap_a = even_a[:, None] - odd_a[None, :]
        gap_b = even_b[:, None] - odd_b[None, :]
        for i, j in zip(*np.nonzero(np.sign(gap_a) * np.sign(gap_b) < 0)):
            F_star = brentq(difference, F_a, F_b, args=(i, j), xtol=xtol)
            even, odd = _sector_levels(with_F(F_star))
            crossings.append(
                ParityCrossing(
                    F=F_star,
                    energy=float(even[i]),
                    gap=float(abs(even[i] - odd[j])),
                    even_level=int(i),
                    odd_level=int(j),
                )
            )
    return crossings


def dump_matrix(H, path: str | Path) -> Path:
    """Write a matrix as row-major complex128, i.e. interleaved (re, im) float64 pairs."""
    dense = H.toarray() if scipy.sparse.issparse(H) else np.asarray(H)
    target = Path(path)
    np.ascontiguousarray(dense, dtype=np.complex128).tofile(target)
    return target
