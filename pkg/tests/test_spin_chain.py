import math

import numpy as np
import pytest
import scipy.linalg

from multiperiod.exceptions import CapacityError, PreconditionError, RwaValidityWarning
from multiperiod.qubit_floquet import population_period
from multiperiod.spin_chain import (
    ChainParams,
    build_rwa_chain_hamiltonian,
    chain_spectrum,
    crossing_amplitude,
    dump_matrix,
    excitation_count,
    parity_crossings,
    parity_eigenvalues,
    parity_operator,
    site_operator,
    stroboscopic_observables,
    two_qubit_eigensystem,
)


# -----------------------------------------------------------------------------
# Fixtures
# -----------------------------------------------------------------------------


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def disordered_chain(rng):
    """A five-qubit chain with per-site detuning and per-bond couplings."""
    return ChainParams.from_rotating_frame(
        rng.uniform(-1, 1, 5), rng.uniform(0.5, 1.5, 4), rng.uniform(-1, 1, 4)
    )


@pytest.fixture
def crossing_chain():
    """Two qubits at mu = 0.6 J, modulated at the even/odd crossing F = 0.8 J."""
    return ChainParams.from_rotating_frame(0.6, 1.0, 0.8, L=2)


# -----------------------------------------------------------------------------
# Parameters
# -----------------------------------------------------------------------------


def test_chain_params_derived_quantities():
    """Test mu = omegaF/2 - omega0 per site and J = Jxx0 + Jyy per bond."""
    c = ChainParams(omega0=[99.0, 100.5, 100.0], Jxx0=0.3, Jyy=0.2, F_amp=[0.1, 0.4], omegaF=200.0)

    assert c.L == 3
    assert c.mu == pytest.approx([1.0, -0.5, 0.0])
    assert c.J == pytest.approx([0.5, 0.5])
    assert c.F == pytest.approx([0.1, 0.4])
    assert c.T == pytest.approx(2 * math.pi / 200)


def test_chain_params_from_rotating_frame():
    c = ChainParams.from_rotating_frame(0.25, 1.0, 0.5, L=4)

    assert c.mu == pytest.approx(np.full(4, 0.25))
    assert c.J == pytest.approx(np.ones(3))


def test_chain_params_rwa_warning():
    """Test that couplings comparable to omega0 trigger the RWA advisory."""
    with pytest.warns(RwaValidityWarning):
        ChainParams(omega0=1.0, Jxx0=0.5, Jyy=0.0, F_amp=0.0, omegaF=2.0, L=2)


def test_chain_params_single_site():
    with pytest.raises(PreconditionError):
        ChainParams(omega0=[100.0], Jxx0=0.0, Jyy=0.0, F_amp=0.0, omegaF=200.0)


def test_chain_params_bad_bond_length():
    """Test that coupling arrays must have length L - 1."""
    with pytest.raises(ValueError):
        ChainParams(omega0=[100.0] * 3, Jxx0=[0.1] * 3, Jyy=0.0, F_amp=0.0, omegaF=200.0)


# -----------------------------------------------------------------------------
# Parity
# -----------------------------------------------------------------------------


def test_parity_operator_single_qubit():
    """Test that a single excitation flips the parity."""
    assert parity_operator(1).toarray() == pytest.approx(np.diag([1.0, -1.0]))


def test_parity_operator_two_qubits():
    """Test +1 on |00>, |11> and -1 on |01>, |10>."""
    P = parity_operator(2).toarray()

    assert np.diag(P) == pytest.approx([1, -1, -1, 1])
    assert P @ P == pytest.approx(np.eye(4))


def test_parity_eigenvalues_invalid():
    with pytest.raises(PreconditionError):
        parity_eigenvalues(0)


def test_excitation_count_little_endian():
    assert list(excitation_count(3)) == [0, 1, 1, 2, 1, 2, 2, 3]


# -----------------------------------------------------------------------------
# Hamiltonian and spectrum
# -----------------------------------------------------------------------------


def test_hamiltonian_zero():
    H = build_rwa_chain_hamiltonian(ChainParams.from_rotating_frame(0.0, 0.0, 0.0, L=2))

    assert H.shape == (4, 4)
    assert np.abs(H.toarray()).max() == 0


def test_hamiltonian_two_qubit_spectrum():
    """Test the spectrum {+-sqrt(mu^2 + F^2), -+J}."""
    mu, J, F = 0.3, 0.7, 0.5
    H = build_rwa_chain_hamiltonian(ChainParams.from_rotating_frame(mu, J, F, L=2))

    root = math.hypot(mu, F)
    expected = sorted([root, -root, -J, J])
    assert np.linalg.eigvalsh(H.toarray()) == pytest.approx(expected, abs=1e-12)


def test_hamiltonian_hermitian_and_parity_conserving(disordered_chain):
    H = build_rwa_chain_hamiltonian(disordered_chain)
    P = parity_operator(disordered_chain.L)

    assert abs(H - H.conj().T).max() <= 1e-14
    assert abs(P @ H - H @ P).max() <= 1e-12


def test_hamiltonian_capacity():
    """Test that L > L_max is refused before allocating the matrix."""
    c = ChainParams.from_rotating_frame(0.1, 1.0, 0.5, L=15)
    with pytest.raises(CapacityError):
        build_rwa_chain_hamiltonian(c)
    with pytest.raises(CapacityError):
        chain_spectrum(ChainParams.from_rotating_frame(0.1, 1.0, 0.5, L=5), L_max=4)


def test_chain_spectrum_parity_eigenstates(disordered_chain):
    """Test that every eigenvector is a parity eigenstate and the basis is orthonormal."""
    spectrum = chain_spectrum(disordered_chain)
    P = parity_operator(disordered_chain.L)
    vectors = spectrum.eigenvectors

    for j in range(vectors.shape[1]):
        assert np.linalg.norm(P @ vectors[:, j] - spectrum.parities[j] * vectors[:, j]) <= 1e-10
    assert vectors.conj().T @ vectors == pytest.approx(np.eye(2**5), abs=1e-12)
    assert np.all(np.diff(spectrum.eigenvalues) >= 0)


def test_chain_spectrum_block_structure(disordered_chain):
    """Test that reordering by parity block-diagonalizes the Hamiltonian exactly."""
    H = build_rwa_chain_hamiltonian(disordered_chain).toarray()
    parity = parity_eigenvalues(disordered_chain.L)
    even, odd = np.flatnonzero(parity == 1), np.flatnonzero(parity == -1)

    assert np.abs(H[np.ix_(even, odd)]).max() <= 1e-14


def test_chain_spectrum_matches_dense(disordered_chain):
    spectrum = chain_spectrum(disordered_chain)
    dense = np.linalg.eigvalsh(build_rwa_chain_hamiltonian(disordered_chain).toarray())

    assert spectrum.eigenvalues == pytest.approx(dense, abs=1e-12)


def test_parity_conserved_under_evolution(disordered_chain, rng):
    """Test that <P> is constant in time for an arbitrary initial state."""
    H = build_rwa_chain_hamiltonian(disordered_chain).toarray()
    P = parity_operator(disordered_chain.L).toarray()
    psi = rng.normal(size=32) + 1j * rng.normal(size=32)
    psi /= np.linalg.norm(psi)

    initial = np.vdot(psi, P @ psi).real
    for t in (0.3, 1.7, 12.0):
        evolved = scipy.linalg.expm(-1j * H * t) @ psi
        assert np.vdot(evolved, P @ evolved).real == pytest.approx(initial, abs=1e-10)


# -----------------------------------------------------------------------------
# Two qubits
# -----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "mu, F, J", [(0.6, 0.8, 1.0), (0.3, -0.5, 0.7), (0.0, 0.4, 1.0), (0.5, 0.0, 1.0), (0.0, 0.0, 0.2)]
)
def test_two_qubit_eigensystem_matches_ed(mu, F, J):
    """Test that the analytic eigenpairs diagonalize the two-qubit Hamiltonian."""
    solution = two_qubit_eigensystem(mu, F, J)
    H = build_rwa_chain_hamiltonian(ChainParams.from_rotating_frame(mu, J, F, L=2)).toarray()
    P = parity_operator(2).toarray()

    for j in range(4):
        psi = solution.states[:, j]
        assert H @ psi == pytest.approx(solution.eps[j] * psi, abs=1e-12)
        assert P @ psi == pytest.approx(solution.parities[j] * psi)


def test_two_qubit_crossing_point():
    """Test that at mu = 0.6 J, F = 0.8 J the levels eps1 and eps4 both equal J."""
    solution = two_qubit_eigensystem(0.6, 0.8, 1.0)

    assert solution.eps[0] == pytest.approx(1.0, abs=1e-15)
    assert solution.eps[3] == 1.0
    assert solution.eps[2] == -1.0


def test_two_qubit_unmodulated_limit():
    """Test that F = 0 gives eps = +-mu with psi_1 = |00>."""
    solution = two_qubit_eigensystem(0.5, 0.0, 1.0)

    assert solution.eps[:2] == pytest.approx((0.5, -0.5))
    assert solution.phi == pytest.approx((0.0, math.pi / 2))


def test_two_qubit_zero_detuning():
    """Test that mu = 0 gives eps = +-F and phi = -+pi/4."""
    solution = two_qubit_eigensystem(0.0, 0.4, 1.0)

    assert solution.eps[:2] == pytest.approx((0.4, -0.4))
    assert solution.phi == pytest.approx((-math.pi / 4, math.pi / 4))


@pytest.mark.parametrize(
    "mu, J, expected", [(0.6, 1.0, 0.8), (0.0, 1.0, 1.0), (0.0, -2.0, 2.0), (1.5, 1.0, None)]
)
def test_crossing_amplitude(mu, J, expected):
    result = crossing_amplitude(mu, J)
    if expected is None:
        assert result is None
    else:
        assert result == pytest.approx(expected)


# -----------------------------------------------------------------------------
# Observables
# -----------------------------------------------------------------------------


def test_site_operator_little_endian():
    """Test that site 0 is the least significant bit and an excited qubit has sigma_z = +1."""
    x0 = site_operator(2, 0, "x").toarray()
    z1 = site_operator(2, 1, "z").toarray()

    assert x0[0b01, 0b00] == 1
    assert x0[0b10, 0b00] == 0
    assert np.diag(z1).real == pytest.approx([-1, -1, 1, 1])


def test_site_operator_invalid_site():
    with pytest.raises(PreconditionError):
        site_operator(2, 2, "x")


def test_stroboscopic_stationary(crossing_chain):
    """Test that a parity eigenstate gives a constant series."""
    psi = two_qubit_eigensystem(0.6, 0.8, 1.0).states[:, 0]

    series = stroboscopic_observables(crossing_chain, psi, site_operator(2, 0, "x"), 10)

    assert series == pytest.approx(np.full(11, series[0]), abs=1e-12)


def test_stroboscopic_period_two(crossing_chain):
    """Test that an even/odd superposition at the crossing alternates with period 2T."""
    solution = two_qubit_eigensystem(0.6, 0.8, 1.0)
    psi = (solution.states[:, 0] + solution.states[:, 3]) / math.sqrt(2)

    flip = stroboscopic_observables(crossing_chain, psi, site_operator(2, 0, "x"), 12)
    even = stroboscopic_observables(
        crossing_chain, psi, site_operator(2, 0, "x") @ site_operator(2, 1, "x"), 12
    )

    assert population_period(flip) == 2
    assert flip[1] == pytest.approx(-flip[0], abs=1e-12)
    assert abs(flip[0]) > 0.5
    # A parity-even observable has no cross term between the two sectors
    assert even == pytest.approx(np.full(13, even[0]), abs=1e-12)


def test_stroboscopic_detuned_beating():
    """Test that away from the crossing the period-2T alternation beats."""
    c = ChainParams.from_rotating_frame(0.6, 1.0, 0.85, L=2)
    solution = two_qubit_eigensystem(0.6, 0.85, 1.0)
    psi = (solution.states[:, 0] + solution.states[:, 3]) / math.sqrt(2)

    series = stroboscopic_observables(c, psi, site_operator(2, 0, "x"), 40)
    beat = 2 * math.pi / abs(solution.eps[0] - solution.eps[3])

    assert population_period(series) is None
    assert beat > 40 * c.T
    assert np.abs(series[2:] - series[:-2]).max() > 1e-6


def test_stroboscopic_preconditions(crossing_chain):
    with pytest.raises(PreconditionError):
        stroboscopic_observables(crossing_chain, np.ones(4), site_operator(2, 0, "x"), 2)
    with pytest.raises(PreconditionError):
        stroboscopic_observables(
            crossing_chain, np.eye(4)[0], np.triu(np.ones((4, 4))), 2
        )


# -----------------------------------------------------------------------------
# Crossings and dumps
# -----------------------------------------------------------------------------


def test_parity_crossings_without_repulsion():
    """Test that the even/odd crossing at mu = 0.6 J sits at F = 0.8 J with no gap."""
    c = ChainParams.from_rotating_frame(0.6, 1.0, 0.0, L=2)

    crossings = parity_crossings(c, np.linspace(0.51, 1.11, 7))

    assert len(crossings) == 2
    for crossing in crossings:
        assert crossing.F == pytest.approx(0.8, abs=1e-12)
        assert crossing.gap < 1e-10


def test_parity_crossings_unequal_frequencies():
    """Test that with unequal qubit frequencies two pairs still cross simultaneously."""
    c = ChainParams.from_rotating_frame([0.5, 0.7], 1.0, 0.0)
    expected = math.sqrt(0.1**2 + 1.0 - 0.6**2)

    crossings = parity_crossings(c, np.linspace(0.51, 1.11, 7))

    assert len(crossings) == 2
    assert crossings[0].F == pytest.approx(crossings[1].F, abs=1e-12)
    assert crossings[0].F == pytest.approx(expected, abs=1e-12)


def test_dump_matrix_layout(tmp_path, disordered_chain):
    """Test that the dump is row-major complex128."""
    H = build_rwa_chain_hamiltonian(disordered_chain)

    path = dump_matrix(H, tmp_path / "H.bin")

    data = np.fromfile(path, dtype=np.complex128).reshape(32, 32)
    assert data == pytest.approx(H.toarray())
    assert path.stat().st_size == 32 * 32 * 16
