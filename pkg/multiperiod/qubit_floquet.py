"""
Floquet states of a single qubit under periodic delta-like pulses.

Rotating-frame kets are ordered (|1>, |0>), so that sigma_z = diag(1, -1) and
|1> is the excited state. The same ordering is used in the laboratory frame.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Literal, Sequence, Tuple

import numpy as np
import scipy.linalg

from multiperiod.exceptions import (
    NumericalError,
    PreconditionError,
    RwaValidityWarning,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

EXCITED = np.array([1, 0], dtype=complex)
GROUND = np.array([0, 1], dtype=complex)

ARCCOS_SLACK = 1e-12
DEGENERACY_TOL = 1e-12
RWA_DETUNING_LIMIT = 0.1
MAX_STEP_FRACTION = 0.05

Protocol = Literal["ramsey", "resonant"]


@dataclass(frozen=True)
class PulseTrain:
    """The periodic drive protocol of a single qubit.

    Pulse areas `nu1` (level spacing) and `F1` (drive amplitude) are
    dimensionless; `sigma` is the width of the Gaussian that realizes the
    smoothed delta function and is only needed by the lab-frame integrator.
    """

    omega0: float
    omegaF: float
    periods_per_T: int = 1
    nu1: float = 0.0
    F1: float = 0.0
    F0: float = 0.0
    sigma: float | None = None

    def __post_init__(self) -> None:
        if int(self.periods_per_T) != self.periods_per_T or self.periods_per_T < 1:
            raise PreconditionError(
                f"periods_per_T must be a positive integer, got {self.periods_per_T}"
            )
        if self.omegaF <= 0:
            raise PreconditionError(f"omegaF must be positive, got {self.omegaF}")

        if abs(self.omegaF - self.omega0) > RWA_DETUNING_LIMIT * self.omegaF:
            warnings.warn(
                f"|omegaF - omega0| = {abs(self.omegaF - self.omega0):.3g} is not small "
                f"compared to omegaF = {self.omegaF:.3g}",
                RwaValidityWarning,
                stacklevel=2,
            )

    @property
    def T(self) -> float:
        """The pulse period, an integer multiple of the carrier period."""
        return 2 * math.pi * self.periods_per_T / self.omegaF

    def check_smoothing(self) -> float:
        """Return sigma if it is smooth on the carrier scale and short on the period scale."""
        if self.sigma is None:
            raise PreconditionError("sigma is required for lab-frame integration")
        if not (self.sigma * self.omegaF > 10 and self.sigma < self.T / 10):
            raise PreconditionError(
                f"sigma = {self.sigma:.3g} must satisfy sigma*omegaF > 10 and sigma < T/10 "
                f"(sigma*omegaF = {self.sigma * self.omegaF:.3g}, T/10 = {self.T / 10:.3g})"
            )
        return self.sigma


@dataclass(frozen=True)
class RwaQubit:
    """Rotating-frame parameters, with the z-axis along the static effective field."""

    delta: float
    F0: float
    Omega: float
    phi: float
    g_vec: Tuple[float, float]
    g: float
    theta: float

    @classmethod
    def from_kick(cls, Omega: float, g: float, theta: float) -> RwaQubit:
        """Build a qubit directly from the Rabi frequency and the rotated kick (g, theta).

        A negative kick area is the positive one about the reversed axis, theta + pi/2.
        """
        if g < 0:
            g, theta = -g, theta + math.pi / 2
        g_vec = (g * math.sin(2 * theta), g * math.cos(2 * theta))
        return cls(
            delta=Omega, F0=0.0, Omega=Omega, phi=0.0, g_vec=g_vec, g=g, theta=theta
        )

    @property
    def lab_kick(self) -> Tuple[float, float]:
        """The unrotated kick (F1, nu1), i.e. (g^x, g^z)."""
        rotated = complex(self.g_vec[1], self.g_vec[0]) * np.exp(1j * self.phi)
        return rotated.imag, rotated.real


@dataclass(frozen=True)
class KickBasis:
    """Real coefficients of the kick eigenvectors psi_+- in the (|1~>, |0~>) basis."""

    zeta_plus: float
    zeta_minus: float
    eta_plus: float
    eta_minus: float

    @property
    def psi_plus(self) -> np.ndarray:
        return np.array([self.zeta_plus, self.eta_plus], dtype=complex)

    @property
    def psi_minus(self) -> np.ndarray:
        return np.array([self.zeta_minus, self.eta_minus], dtype=complex)


@dataclass(frozen=True)
class FloquetPair:
    """The two rotating-frame quasienergies with their eigenstates at t0.

    `states[:, j]` holds (alpha, beta) of the state with quasienergy `eps[j]`.
    """

    eps: Tuple[float, float]
    states: np.ndarray
    t0: float
    T: float
    degenerate: bool = False

    @property
    def eps_scaled(self) -> Tuple[float, float]:
        """Quasienergies in units of 1/T."""
        return self.eps[0] * self.T, self.eps[1] * self.T


@dataclass(frozen=True)
class LabTrajectory:
    times: np.ndarray
    states: np.ndarray
    rwa_prediction: np.ndarray
    fidelity: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def derive_rwa(p: PulseTrain) -> RwaQubit:
    """Derive the rotating-frame parameters of a pulse train."""
    delta = p.omega0 - p.omegaF
    Omega = math.hypot(delta, p.F0)
    # atan2 gives pi/2*sgn(F0) at delta = 0 and 0 when delta = F0 = 0
    phi = math.atan2(p.F0, delta)

    rotated = np.exp(-1j * phi) * complex(p.nu1, p.F1)
    g_vec = (float(rotated.imag), float(rotated.real))
    g = math.hypot(p.nu1, p.F1)
    # tan(theta) = g~x / (g + g~z) is the half-angle of the kick direction
    theta = 0.5 * math.atan2(g_vec[0], g_vec[1]) if g > 0 else 0.0

    return RwaQubit(
        delta=delta, F0=p.F0, Omega=Omega, phi=phi, g_vec=g_vec, g=g, theta=theta
    )


def kick_basis(q: RwaQubit) -> KickBasis:
    """Eigenvectors of the rotated kick g~.sigma~ with eigenvalues +g and -g."""
    return KickBasis(
        zeta_plus=math.cos(q.theta),
        zeta_minus=-math.sin(q.theta),
        eta_plus=math.sin(q.theta),
        eta_minus=math.cos(q.theta),
    )


def fold_quasienergy(eps: float, T: float) -> float:
    """Fold a quasienergy into the Brillouin zone [-pi/T, pi/T)."""
    zone = 2 * math.pi / T
    return (eps + math.pi / T) % zone - math.pi / T


def closed_form_quasienergy(q: RwaQubit, T: float) -> Tuple[float, float]:
    """The quasienergies from the arccos formula, eps1 = -eps2 in [0, pi/T]."""
    if T <= 0:
        raise PreconditionError(f"T must be positive, got {T}")

    half_g = q.g / 2
    half_phase = q.Omega * T / 2
    argument = math.cos(half_g) * math.cos(half_phase) - math.cos(
        2 * q.theta
    ) * math.sin(half_g) * math.sin(half_phase)

    if abs(argument) > 1 + ARCCOS_SLACK:
        raise NumericalError(f"arccos argument {argument!r} is outside [-1, 1]")

    eps = math.acos(min(1.0, max(-1.0, argument))) / T
    return eps, -eps


def _free_evolution(Omega: float, tau: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * Omega * tau), np.exp(0.5j * Omega * tau)])


def _kick_matrix(q: RwaQubit) -> np.ndarray:
    basis = kick_basis(q)
    plus, minus = basis.psi_plus, basis.psi_minus
    return np.exp(-0.5j * q.g) * np.outer(plus, plus) + np.exp(0.5j * q.g) * np.outer(
        minus, minus
    )


def monodromy_matrix(q: RwaQubit, T: float, t0: float) -> np.ndarray:
    """One-period evolution operator from t0 to T + t0 in the (|1~>, |0~>) basis."""
    if not 0 < t0 < T:
        raise PreconditionError(f"t0 = {t0} must lie strictly inside (0, T = {T})")

    return _free_evolution(q.Omega, t0) @ _kick_matrix(q) @ _free_evolution(
        q.Omega, T - t0
    )


def floquet_eigensystem(q: RwaQubit, T: float, t0: float) -> FloquetPair:
    """Floquet eigenstates at t0 and rotating-frame quasienergies, eps1 >= eps2."""
    U = monodromy_matrix(q, T, t0)

    # The monodromy matrix is normal, so its Schur vectors are orthonormal eigenvectors
    schur_form, vectors = scipy.linalg.schur(U, output="complex")
    eigenvalues = np.diag(schur_form)

    degenerate = bool(abs(eigenvalues[0] - eigenvalues[1]) < DEGENERACY_TOL)
    if degenerate:
        vectors = IDENTITY.copy()

    eps = [fold_quasienergy(-np.angle(value) / T, T) for value in eigenvalues]
    order = np.argsort([-value for value in eps], kind="stable")

    return FloquetPair(
        eps=(eps[order[0]], eps[order[1]]),
        states=vectors[:, order],
        t0=t0,
        T=T,
        degenerate=degenerate,
    )


def lab_frame_quasienergy(eps: float, T: float, n: int) -> float:
    """Project a rotating-frame quasienergy onto the laboratory Brillouin zone."""
    if n % 2 == 0:
        return eps
    sign = 1.0 if eps >= 0 else -1.0
    return eps - sign * math.pi / T


def _check_periods(k) -> np.ndarray:
    periods = np.asarray(k)
    if np.any(periods < 0):
        raise PreconditionError("the number of elapsed periods must be non-negative")
    return periods


def ramsey_population(nu1: float, k):
    """Excited-state population of the Ramsey protocol after k pulse periods."""
    periods = _check_periods(k)
    return np.cos(nu1 * periods / 2) ** 2


def resonant_population(F1: float, k):
    """Excited-state population after k resonant pulses, starting from the ground state."""
    periods = _check_periods(k)
    return np.sin(F1 * periods / 2) ** 2


def population_period(values: Sequence[float], tol: float = 1e-12) -> int | None:
    """The fundamental discrete period of a sampled sequence, or None within the window."""
    samples = np.asarray(values, dtype=float)
    for period in range(1, len(samples)):
        if np.all(np.abs(samples[period:] - samples[:-period]) <= tol):
            return period
    return None


def _convergents(x: Fraction) -> Iterator[Tuple[int, int]]:
    whole = math.floor(x)
    p_prev, p = 1, whole
    q_prev, q = 0, 1
    yield p, q

    remainder = x - whole
    while remainder:
        x = 1 / remainder
        term = math.floor(x)
        remainder = x - term
        p_prev, p = p, term * p + p_prev
        q_prev, q = q, term * q + q_prev
        yield p, q


def detect_period_multiplicity(
    eps1: float, eps2: float, T: float, max_N: int, tol: float
) -> Tuple[int, int] | None:
    """Find (M, N) with (eps1 - eps2) T / 2 pi = M / N, N > |M| >= 1, N <= max_N."""
    if max_N < 2:
        raise PreconditionError(f"max_N must be at least 2, got {max_N}")
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")

    ratio = (eps1 - eps2) * T / (2 * math.pi)
    for M, N in _convergents(Fraction(ratio)):
        if N > max_N:
            break
        if N > abs(M) >= 1 and abs(ratio - M / N) <= tol:
            return M, N
    return None


def stroboscopic_expectation(
    pair: FloquetPair,
    amplitudes: Tuple[complex, complex],
    observable: np.ndarray,
    k_max: int,
) -> np.ndarray:
    """<O>(t0 + kT), k = 0..k_max, for the superposition A psi_1 + B psi_2."""
    A, B = amplitudes
    if not math.isclose(abs(A) ** 2 + abs(B) ** 2, 1.0, abs_tol=1e-10):
        raise PreconditionError("the superposition amplitudes must be normalized")

    k = np.arange(k_max + 1)
    phases = np.exp(-1j * np.outer(k * pair.T, pair.eps))
    states = (phases * np.array([A, B])) @ pair.states.T
    return np.einsum("ki,ij,kj->k", states.conj(), observable, states).real


def _rotation_to_lab(phi: float) -> np.ndarray:
    """Columns are |1~> and |0~> written in the unrotated (|1>, |0>) basis."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rwa_propagator(q: RwaQubit, T: float, t_start: float, t_end: float) -> np.ndarray:
    """Exact RWA evolution from t_start to t_end in the unrotated (|1>, |0>) basis.

    Kicks act at every t = nT with t_start < nT <= t_end.
    """
    if t_end < t_start:
        raise PreconditionError("t_end must not precede t_start")

    kick = _kick_matrix(q)
    propagator = IDENTITY.copy()
    now = t_start
    n = math.floor(t_start / T) + 1
    while n * T <= t_end:
        propagator = kick @ _free_evolution(q.Omega, n * T - now) @ propagator
        now = n * T
        n += 1
    propagator = _free_evolution(q.Omega, t_end - now) @ propagator

    rotation = _rotation_to_lab(q.phi)
    return rotation @ propagator @ rotation.conj().T


def _frame(omegaF: float, t: float) -> np.ndarray:
    """The rotating-frame transformation U(t) = exp(-i omegaF t sigma_z / 2)."""
    return np.diag([np.exp(-0.5j * omegaF * t), np.exp(0.5j * omegaF * t)])


def _pulse_envelope(t: np.ndarray, T: float, sigma: float) -> np.ndarray:
    """Unit-area Gaussians of width sigma centred on t = nT (nearest three pulses)."""
    nearest = np.round(t / T)
    envelope = np.zeros_like(t)
    for offset in (-1, 0, 1):
        centre = (nearest + offset) * T
        envelope += np.exp(-0.5 * ((t - centre) / sigma) ** 2)
    return envelope / (math.sqrt(2 * math.pi) * sigma)


def _spin_exponentials(bx: np.ndarray, bz: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i tau (bx sigma_x + bz sigma_z)) for arrays of field components."""
    magnitude = np.hypot(bx, bz)
    angle = magnitude * tau
    cos, sin = np.cos(angle), np.sin(angle)
    # sin(angle)/magnitude, finite at zero field
    sinc = tau * np.sinc(angle / np.pi)

    steps = np.empty((len(bx), 2, 2), dtype=complex)
    steps[:, 0, 0] = cos - 1j * sinc * bz
    steps[:, 1, 1] = cos + 1j * sinc * bz
    steps[:, 0, 1] = -1j * sinc * bx
    steps[:, 1, 0] = -1j * sinc * bx
    return steps


def lab_frame_integrate(
    p: PulseTrain,
    psi_init: Sequence[complex],
    t_span: float,
    dt: float,
    t0: float | None = None,
) -> LabTrajectory:
    """Integrate the full lab-frame Schrodinger equation with a unitary splitting stepper."""
    sigma = p.check_smoothing()
    max_step = MAX_STEP_FRACTION * min(2 * math.pi / p.omega0, sigma)
    if dt >= max_step:
        raise PreconditionError(f"dt = {dt:.3g} must be below {max_step:.3g}")

    psi = np.asarray(psi_init, dtype=complex)
    if not math.isclose(np.linalg.norm(psi), 1.0, abs_tol=1e-10):
        raise PreconditionError("the initial state must be normalized")

    T = p.T
    t0 = T / 2 if t0 is None else t0
    n_steps = max(1, math.ceil(t_span / dt))
    step = t_span / n_steps

    midpoints = t0 + (np.arange(n_steps) + 0.5) * step
    envelope = _pulse_envelope(midpoints, T, sigma)
    level_shift = p.nu1 * envelope
    drive = (p.F0 + p.F1 * envelope) * np.cos(p.omegaF * midpoints)
    kicks = _spin_exponentials(drive, 0.5 * level_shift, step)
    half_free = np.array(
        [np.exp(-0.25j * p.omega0 * step), np.exp(0.25j * p.omega0 * step)]
    )

    states = np.empty((n_steps + 1, 2), dtype=complex)
    states[0] = psi
    for i in range(n_steps):
        psi = half_free * (kicks[i] @ (half_free * psi))
        states[i + 1] = psi

    t_end = t0 + t_span
    q = derive_rwa(p)
    rotating_init = _frame(p.omegaF, t0).conj().T @ states[0]
    prediction = _frame(p.omegaF, t_end) @ rwa_propagator(q, T, t0, t_end) @ rotating_init
    fidelity = float(abs(np.vdot(prediction, states[-1])) ** 2)

    return LabTrajectory(
        times=t0 + np.arange(n_steps + 1) * step,
        states=states,
        rwa_prediction=prediction,
        fidelity=fidelity,
    )


def lab_frame_protocol_population(
    p: PulseTrain, protocol: Protocol, k: int, dt: float
) -> float:
    """Run an observation protocol for k periods on the lab-frame integrator.

    "resonant" starts in the ground state and reads the excited population;
    "ramsey" brackets the evolution by ideal resonant pi/2 pulses applied in the
    rotating frame.
    """
    T = p.T
    t0 = T / 2
    t_end = t0 + k * T
    half_pi = scipy.linalg.expm(-0.25j * np.pi * SIGMA_X)

    if protocol == "resonant":
        psi_init = GROUND
    elif protocol == "ramsey":
        psi_init = _frame(p.omegaF, t0) @ half_pi @ GROUND
    else:
        raise PreconditionError(f"unknown protocol {protocol!r}")

    if k == 0:
        final = psi_init
    else:
        final = lab_frame_integrate(p, psi_init, k * T, dt, t0=t0).final_state

    if protocol == "ramsey":
        final = half_pi @ _frame(p.omegaF, t_end).conj().T @ final

    return float(abs(final[0]) ** 2)


def quasienergy_mismatch(
    a: Tuple[float, float], b: Tuple[float, float], T: float
) -> float:
    """Distance between two quasienergy pairs, compared unordered and modulo 2 pi / T."""

    def distance(x: float, y: float) -> float:
        return abs(fold_quasienergy(x - y, T))

    direct = max(distance(a[0], b[0]), distance(a[1], b[1]))
    swapped = max(distance(a[0], b[1]), distance(a[1], b[0]))
    return min(direct, swapped)
