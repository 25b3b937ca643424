import math

import numpy as np
import pytest

from atomcavity.errors import (
    AmbiguousSteadyStateError,
    DimensionError,
    SingularStructureError,
    UnphysicalStateError,
)
from atomcavity.qlinalg import (
    DensityMatrix,
    KetState,
    dagger,
    expectation,
    kron,
    partial_trace,
    steady_null_solve,
    vec,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_kron_identity():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_diagonal():
    out = kron(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert np.allclose(out, np.diag([3.0, 4.0, 6.0, 8.0]))


def test_kron_bit_flip_both_qubits():
    ket00 = np.array([1, 0, 0, 0], dtype=complex)
    out = kron(SX, SX) @ ket00
    assert np.allclose(out, [0, 0, 0, 1])


def test_dagger_involution_and_hermiticity():
    rng = np.random.default_rng(3)
    for _ in range(3):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.array_equal(dagger(dagger(a)), a)
        h = a + dagger(a)
        assert np.allclose(h, dagger(h))


def _random_density(rng, dims):
    d = int(np.prod(dims))
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ dagger(a)
    return DensityMatrix(rho / np.trace(rho), dims)


def test_partial_trace_product_state():
    rng = np.random.default_rng(11)
    rho_a = _random_density(rng, (2,))
    rho_b = _random_density(rng, (3,))
    joint = DensityMatrix(kron(rho_a.data, rho_b.data), (2, 3))
    back_a = partial_trace(joint, keep={0})
    back_b = partial_trace(joint, keep={1})
    assert np.max(np.abs(back_a.data - rho_a.data)) < 1e-12
    assert np.max(np.abs(back_b.data - rho_b.data)) < 1e-12
    assert back_a.dims == (2,)
    assert back_b.dims == (3,)


def test_partial_trace_bell_state_is_maximally_mixed():
    bell = KetState(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    reduced = partial_trace(bell.to_density(), keep={0})
    assert np.allclose(reduced.data, np.eye(2) / 2)


def test_partial_trace_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(5)
    rho = _random_density(rng, (2, 2, 3))
    red = partial_trace(rho, keep={0, 2})
    assert red.dims == (2, 3)
    assert red.trace() == pytest.approx(1.0, abs=1e-12)
    assert red.hermiticity_defect() < 1e-12


def test_partial_trace_gate_output_coherence():
    # brute-force oracle: reduced coherence of the transformed two-mode state
    # computed by an explicit sum over the traced index
    alpha = beta = 0.1
    phi_a, phi_b, delta = math.radians(17.5), math.radians(12.5), math.radians(16.0)
    amps = np.array(
        [
            1.0,
            beta * np.exp(1j * phi_b),
            alpha * np.exp(1j * phi_a),
            alpha * beta * np.exp(1j * (phi_a + phi_b + delta)),
        ],
        dtype=complex,
    )
    amps /= np.linalg.norm(amps)
    psi = amps.reshape(2, 2)
    expected_01 = sum(psi[0, k] * np.conj(psi[1, k]) for k in range(2))

    rho_a = partial_trace(KetState(amps, (2, 2)).to_density(), keep={0})
    assert rho_a.data[0, 1] == pytest.approx(expected_01, abs=1e-15)
    # argument is -(phi_a) plus a correction of order m_b = |beta|^2
    corr = np.angle(rho_a.data[0, 1]) + phi_a
    assert abs(corr) < 2.0 * abs(beta) ** 2


def test_partial_trace_invalid_index():
    rng = np.random.default_rng(1)
    rho = _random_density(rng, (2, 2))
    with pytest.raises(DimensionError):
        partial_trace(rho, keep={2})
    with pytest.raises(DimensionError):
        partial_trace(rho, keep=set())


def test_expectation_trivial_cases():
    half = DensityMatrix(np.eye(2) / 2, (2,))
    assert expectation(half, SZ) == pytest.approx(0.0)
    one = DensityMatrix(np.diag([0.0, 1.0]), (2,))
    number = np.diag([0.0, 1.0]).astype(complex)
    assert expectation(one, number) == pytest.approx(1.0)


def test_expectation_real_for_hermitian_pair():
    rng = np.random.default_rng(17)
    for _ in range(20):
        rho = _random_density(rng, (4,))
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        op = a + dagger(a)
        assert abs(expectation(rho, op).imag) < 1e-10


def test_expectation_dimension_mismatch():
    rho = DensityMatrix(np.eye(2) / 2, (2,))
    with pytest.raises(DimensionError):
        expectation(rho, np.eye(3))


def _cavity_liouvillian(n_levels, kappa, detuning, drive):
    """Driven damped cavity generator, angular units."""
    a = np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), 1).astype(complex)
    h = -detuning * (dagger(a) @ a) + drive * dagger(a) + np.conj(drive) * a
    eye = np.eye(n_levels, dtype=complex)
    L = -1j * (kron(eye, h) - kron(h.T, eye))
    c = math.sqrt(2.0 * kappa) * a
    cdc = dagger(c) @ c
    L += kron(np.conj(c), c) - 0.5 * kron(eye, cdc) - 0.5 * kron(cdc.T, eye)
    return L, a


def test_steady_null_solve_decaying_cavity_gives_vacuum():
    L, _ = _cavity_liouvillian(5, kappa=2.0, detuning=0.0, drive=0.0)
    rho = steady_null_solve(L, dims=(5,))
    expected = np.zeros((5, 5))
    expected[0, 0] = 1.0
    assert np.max(np.abs(rho.data - expected)) < 1e-10


def test_steady_null_solve_scalar_space():
    rho = steady_null_solve(np.zeros((1, 1)))
    assert rho.data.shape == (1, 1)
    assert rho.data[0, 0] == pytest.approx(1.0)


def test_steady_null_solve_driven_cavity_matches_coherent_state():
    # closed form: <a> = -i*drive / (kappa - i*detuning)
    kappa, detuning, drive = 3.0, 1.5, 0.2
    L, a = _cavity_liouvillian(8, kappa, detuning, drive)
    rho = steady_null_solve(L, dims=(8,))
    rho.check_physical()
    amp = expectation(rho, a)
    expected = -1j * drive / (kappa - 1j * detuning)
    assert amp == pytest.approx(expected, abs=1e-8)
    n_op = dagger(a) @ a
    assert expectation(rho, n_op).real == pytest.approx(abs(expected) ** 2, abs=1e-8)


def test_steady_null_solve_output_is_physical():
    rng = np.random.default_rng(23)
    for _ in range(5):
        kappa = rng.uniform(0.5, 5.0)
        det = rng.uniform(-3.0, 3.0)
        drive = rng.uniform(0.0, 0.4)
        L, _ = _cavity_liouvillian(7, kappa, det, drive)
        rho = steady_null_solve(L, dims=(7,))
        rho.check_physical()


def test_steady_null_solve_no_null_vector():
    with pytest.raises(SingularStructureError):
        steady_null_solve(np.eye(4, dtype=complex))


def test_steady_null_solve_reports_ambiguity():
    # two uncoupled dark states: generator is identically zero on a qubit
    with pytest.raises(AmbiguousSteadyStateError) as err:
        steady_null_solve(np.zeros((4, 4), dtype=complex))
    assert err.value.null_dimension == 4


def test_steady_null_solve_rejects_non_square():
    with pytest.raises(DimensionError):
        steady_null_solve(np.zeros((3, 4)))
    with pytest.raises(DimensionError):
        steady_null_solve(np.zeros((5, 5)))  # not a perfect square


def test_density_matrix_validation():
    with pytest.raises(DimensionError):
        DensityMatrix(np.zeros((2, 3)), (2,))
    with pytest.raises(DimensionError):
        DensityMatrix(np.eye(4), (2,))
    bad_trace = DensityMatrix(np.eye(2), (2,))
    with pytest.raises(UnphysicalStateError):
        bad_trace.check_physical()
    not_psd = DensityMatrix(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(UnphysicalStateError):
        not_psd.check_physical()


def test_ket_state_normalization_and_density():
    ket = KetState(np.array([1.0, 1.0]) / math.sqrt(2), (2,))
    ket.check_normalized()
    rho = ket.to_density()
    assert rho.trace() == pytest.approx(1.0)
    with pytest.raises(UnphysicalStateError):
        KetState(np.array([1.0, 1.0]), (2,)).check_normalized()


def test_vec_column_stacking_convention():
    m = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.array_equal(vec(m), np.array([1, 3, 2, 4], dtype=complex))
