"""Entanglement and CHSH analysis of two-qubit gate outputs.

The maximal CHSH sum of a two-qubit state is computed in closed form from
the two largest singular values of the 3x3 Pauli correlation matrix
T_ij = Tr[rho (sigma_i x sigma_j)]: s_max = 2*sqrt(t1^2 + t2^2).  Explicit
optimal measurement directions are built from the corresponding singular
vectors, and phenomenological decoherence enters as an element-wise mask
on the density matrix in the (--, -+, +-, ++) basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, InvalidParameterError
from .qlinalg import DensityMatrix
from .qpg import POLARIZATION, QpgAngles, TwoModeState, truth_table

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

TSIRELSON = 2.0 * math.sqrt(2.0)

# coherence classes in the 4x4 two-qubit basis: "self" pairs differ in
# exactly one qubit, "mutual" pairs differ in both
SELF_COHERENCE_PAIRS = ((0, 1), (0, 2), (1, 3), (2, 3))
MUTUAL_COHERENCE_PAIRS = ((0, 3), (1, 2))


@dataclass(frozen=True)
class ChshReport:
    """Maximal CHSH sum and the settings that achieve it."""

    s_max: float
    violating: bool
    alice_settings: tuple[np.ndarray, np.ndarray]   # measurement directions a, a'
    bob_settings: tuple[np.ndarray, np.ndarray]     # measurement directions b, b'


@dataclass(frozen=True)
class DecoherenceMask:
    """Element-wise damping factors d_jk on a two-qubit density matrix.

    Real symmetric with unit diagonal (so the trace is preserved) and
    entries in [0, 1].
    """

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.shape != (4, 4):
            raise DimensionError(f"mask must be 4x4, got {d.shape}")
        if not np.allclose(d, d.T, atol=1e-12):
            raise InvalidParameterError("mask must be symmetric")
        if not np.allclose(np.diag(d), 1.0, atol=1e-12):
            raise InvalidParameterError("mask diagonal must be 1 (trace preservation)")
        if d.min() < -1e-12 or d.max() > 1.0 + 1e-12:
            raise InvalidParameterError("mask entries must lie in [0, 1]")

    @classmethod
    def ones(cls) -> "DecoherenceMask":
        return cls(np.ones((4, 4)))

    @classmethod
    def uniform(cls, value: float) -> "DecoherenceMask":
        """All off-diagonal coherences damped by the same factor."""
        d = np.full((4, 4), float(value))
        np.fill_diagonal(d, 1.0)
        return cls(d)

    @classmethod
    def damp_pairs(cls, pairs, value: float) -> "DecoherenceMask":
        """Damp only the listed coherence pairs; everything else untouched."""
        d = np.ones((4, 4))
        for j, k in pairs:
            d[j, k] = d[k, j] = float(value)
        return cls(d)


@dataclass(frozen=True)
class MaskedState:
    """Density matrix after masking, with a positivity flag."""

    rho: DensityMatrix
    physical: bool


def _as_two_qubit_density(state) -> DensityMatrix:
    if isinstance(state, TwoModeState):
        return state.ket().to_density()
    if isinstance(state, DensityMatrix):
        if state.dim != 4:
            raise DimensionError(f"need a two-qubit (4x4) density matrix, got dimension {state.dim}")
        return state
    raise DimensionError(f"unsupported state type {type(state).__name__}")


def qpg_plus_plus_output(angles: QpgAngles) -> TwoModeState:
    """Gate output for the balanced product input (|-> + |+>)(|-> + |+>)/2."""
    balanced = TwoModeState(np.full(4, 0.5, dtype=complex), POLARIZATION)
    return TwoModeState(truth_table(angles) @ balanced.amplitudes, POLARIZATION)


def correlation_matrix(rho: DensityMatrix) -> np.ndarray:
    """3x3 Pauli correlation matrix T_ij = Tr[rho (sigma_i x sigma_j)]."""
    t = np.empty((3, 3))
    for i, si in enumerate(_PAULIS):
        for j, sj in enumerate(_PAULIS):
            t[i, j] = float(np.real(np.trace(rho.data @ np.kron(si, sj))))
    return t


def chsh_max(state, require_physical: bool = True) -> ChshReport:
    """Maximal CHSH sum of a two-qubit state, with certifying settings.

    With ``require_physical`` the density matrix must pass Hermiticity,
    trace, and positivity checks; disable it to evaluate flagged-unphysical
    masked states.
    """
    rho = _as_two_qubit_density(state)
    if require_physical:
        rho.check_physical()

    t = correlation_matrix(rho)
    u, s, vt = np.linalg.svd(t)
    t1, t2 = float(s[0]), float(s[1])
    s_max = 2.0 * math.sqrt(t1 * t1 + t2 * t2)

    # optimal settings: Alice measures along the two leading left singular
    # directions; Bob along cos/sin combinations of the right ones
    theta = math.atan2(t2, t1)
    a1, a2 = u[:, 0], u[:, 1]
    b1 = math.cos(theta) * vt[0] + math.sin(theta) * vt[1]
    b2 = math.cos(theta) * vt[0] - math.sin(theta) * vt[1]
    return ChshReport(
        s_max=s_max,
        violating=s_max > 2.0,
        alice_settings=(a1, a2),
        bob_settings=(b1, b2),
    )


def chsh_sum(rho: DensityMatrix, alice_settings, bob_settings) -> float:
    """CHSH sum E(a,b) + E(a,b') + E(a',b) - E(a',b') for explicit directions."""
    t = correlation_matrix(rho)
    a1, a2 = alice_settings
    b1, b2 = bob_settings
    e = lambda a, b: float(a @ t @ b)
    return e(a1, b1) + e(a1, b2) + e(a2, b1) - e(a2, b2)


def chsh_formula(delta_deg: float) -> float:
    """Closed-form maximal CHSH sum of the gate output, 2*sqrt(1 + sin^2(delta/2))."""
    half = math.radians(delta_deg) / 2.0
    return 2.0 * math.sqrt(1.0 + math.sin(half) ** 2)


def concurrence(state) -> float:
    """Concurrence of a two-qubit state.

    Pure states use 2|ad - bc|; density matrices use the spin-flip
    eigenvalue construction sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4).
    """
    if isinstance(state, TwoModeState):
        a, b, c, d = state.amplitudes
        return float(2.0 * abs(a * d - b * c))
    rho = _as_two_qubit_density(state)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    rho_tilde = rho.data @ yy @ np.conj(rho.data) @ yy
    evals = np.linalg.eigvals(rho_tilde)
    evals = np.sqrt(np.abs(np.sort(np.real(evals))))
    return float(max(0.0, evals[3] - evals[2] - evals[1] - evals[0]))


def apply_mask(rho: DensityMatrix, mask: DecoherenceMask, psd_tol: float = 1e-9) -> MaskedState:
    """Element-wise product rho_jk * d_jk in the (--, -+, +-, ++) basis.

    The trace is preserved by the unit mask diagonal.  Masking is not a
    completely positive map for every mask, so positivity is re-checked
    and the result flagged rather than rejected.
    """
    rho4 = _as_two_qubit_density(rho)
    masked = DensityMatrix(rho4.data * mask.d, rho4.dims)
    physical = masked.min_eigenvalue() >= -psd_tol
    return MaskedState(rho=masked, physical=physical)


def violation_vs_damping(
    angles: QpgAngles,
    mask_family: Callable[[float], DecoherenceMask],
    grid: Sequence[float],
) -> list[tuple[float, float]]:
    """Maximal CHSH sum of the masked gate output along a mask family.

    ``mask_family`` maps a scalar damping parameter to a mask; evaluation
    tolerates flagged-unphysical masked states (the correlation-matrix
    formula stays well defined).
    """
    rho = qpg_plus_plus_output(angles).ket().to_density()
    out = []
    for d in grid:
        masked = apply_mask(rho, mask_family(float(d)))
        report = chsh_max(masked.rho, require_physical=False)
        out.append((float(d), report.s_max))
    return out


def uniform_mask_family(d: float) -> DecoherenceMask:
    """All coherences scaled by d."""
    return DecoherenceMask.uniform(d)


def self_mask_family(d: float) -> DecoherenceMask:
    """Only single-qubit ("self") coherences scaled by d."""
    return DecoherenceMask.damp_pairs(SELF_COHERENCE_PAIRS, d)


def mutual_mask_family(d: float) -> DecoherenceMask:
    """Only both-qubit ("mutual") coherences scaled by d."""
    return DecoherenceMask.damp_pairs(MUTUAL_COHERENCE_PAIRS, d)


MASK_FAMILIES = {
    "uniform": uniform_mask_family,
    "self": self_mask_family,
    "mutual": mutual_mask_family,
}
