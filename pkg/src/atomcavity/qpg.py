"""Conditional-phase transformation of two weak field modes and its truth table.

The transformation multiplies each two-mode occupation basis state |j>|k>
(j, k in {0, 1}) by exp(i*mu_jk).  With mu_00 = 0, mu_10 = phi_a,
mu_01 = phi_b and mu_11 = phi_a + phi_b + delta, a nonzero conditional
phase delta entangles product inputs.  Interfaces use degrees; radians
internally.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BasisError,
    InsufficientDataError,
    InvalidParameterError,
    NonInvertibleSlopeError,
    UndefinedPhaseError,
)
from .qlinalg import KetState, partial_trace

OCCUPATION = "occupation"
POLARIZATION = "polarization"

# polarization basis order (a qubit slow, '+' = 1)
POLARIZATION_LABELS = ("--", "-+", "+-", "++")

# weak-field validity guard on coherent amplitudes
MAX_MEAN_PHOTONS = 0.2

COHERENCE_FLOOR = 1e-14

SLOPE_CSV_HEADER = ["m_pump", "phi_probe_deg"]


@dataclass(frozen=True)
class QpgAngles:
    """Gate angles in degrees: single-beam phases and the conditional phase."""

    phi_a_deg: float
    phi_b_deg: float
    delta_deg: float
    phi_a_unc_deg: float | None = None
    phi_b_unc_deg: float | None = None
    delta_unc_deg: float | None = None


@dataclass(frozen=True)
class PhaseTable:
    """The four transformation phases mu_jk, stored in radians."""

    mu00: float
    mu01: float
    mu10: float
    mu11: float

    def __post_init__(self):
        for name in ("mu00", "mu01", "mu10", "mu11"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")

    @classmethod
    def from_angles(cls, angles: QpgAngles) -> "PhaseTable":
        pa = math.radians(angles.phi_a_deg)
        pb = math.radians(angles.phi_b_deg)
        d = math.radians(angles.delta_deg)
        return cls(mu00=0.0, mu01=pb, mu10=pa, mu11=pa + pb + d)

    def to_angles(self) -> QpgAngles:
        """Inverse of from_angles after removing the global phase mu00."""
        pa = self.mu10 - self.mu00
        pb = self.mu01 - self.mu00
        return QpgAngles(
            phi_a_deg=math.degrees(pa),
            phi_b_deg=math.degrees(pb),
            delta_deg=math.degrees(self.conditional_phase_rad),
        )

    @property
    def conditional_phase_rad(self) -> float:
        """mu11 - mu10 - mu01 + mu00, the nonlinear part of the two-photon phase."""
        return self.mu11 - self.mu10 - self.mu01 + self.mu00

    def is_conditional(self, tol: float = 1e-12) -> bool:
        """True when the transformation entangles product inputs (delta != 0 mod 2pi)."""
        wrapped = (self.conditional_phase_rad + math.pi) % (2.0 * math.pi) - math.pi
        return abs(wrapped) > tol


@dataclass
class TwoModeState:
    """Normalized two-mode state over a tagged 2x2 basis.

    Occupation basis order: 00, 01, 10, 11 (a mode slow).
    Polarization basis order: --, -+, +-, ++.
    """

    amplitudes: np.ndarray
    basis: str

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 4:
            raise BasisError(f"two-mode state needs 4 amplitudes, got {self.amplitudes.size}")
        if self.basis not in (OCCUPATION, POLARIZATION):
            raise BasisError(f"basis must be {OCCUPATION!r} or {POLARIZATION!r}, got {self.basis!r}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm * norm - 1.0) > 1e-12:
            raise InvalidParameterError(f"state is not normalized: |psi|^2 = {norm * norm!r}")

    def ket(self) -> KetState:
        return KetState(self.amplitudes, (2, 2))


def apply_ansatz(state: TwoModeState, table: PhaseTable) -> TwoModeState:
    """Multiply the |j>|k> coefficient by exp(i*mu_jk); norm is preserved exactly."""
    if state.basis != OCCUPATION:
        raise BasisError(f"phase transformation is defined on the occupation basis, got {state.basis!r}")
    phases = np.exp(1j * np.array([table.mu00, table.mu01, table.mu10, table.mu11]))
    return TwoModeState(state.amplitudes * phases, OCCUPATION)


def coherent_output(alpha: complex, beta: complex, angles: QpgAngles) -> TwoModeState:
    """Transformed one-photon-truncated product of two weak coherent amplitudes.

    Valid only for |alpha|^2, |beta|^2 <= 0.2 (the transformation is defined
    on the {0, 1} occupation subspace).
    """
    alpha, beta = complex(alpha), complex(beta)
    for name, amp in (("alpha", alpha), ("beta", beta)):
        if abs(amp) ** 2 > MAX_MEAN_PHOTONS:
            raise InvalidParameterError(
                f"|{name}|^2 = {abs(amp)**2:.3f} exceeds the weak-field validity bound {MAX_MEAN_PHOTONS}"
            )
    raw = np.array([1.0, beta, alpha, alpha * beta], dtype=complex)
    state = TwoModeState(raw / np.linalg.norm(raw), OCCUPATION)
    return apply_ansatz(state, PhaseTable.from_angles(angles))


def reduced_probe_phase(state: TwoModeState) -> float:
    """Phase of the first mode's reduced one-photon coherence, in degrees.

    Traces out the second mode and returns arg(<1|rho_a|0>), the convention
    in which a bare first-mode phase phi_a is returned as +phi_a.
    """
    if state.basis != OCCUPATION:
        raise BasisError(f"reduced phase is defined on the occupation basis, got {state.basis!r}")
    rho_a = partial_trace(state.ket().to_density(), keep={0})
    coherence = rho_a.data[1, 0]
    if abs(coherence) < COHERENCE_FLOOR:
        raise UndefinedPhaseError(f"one-photon coherence magnitude {abs(coherence):.3e} is numerically zero")
    return math.degrees(np.angle(coherence))


@dataclass(frozen=True)
class SlopeExtraction:
    """Conditional phase recovered from the initial slope of a phase-vs-photon curve."""

    delta_deg: float
    delta_unc_deg: float
    slope_deg_per_photon: float
    slope_unc_deg_per_photon: float
    intercept_deg: float
    delta_half_angle_deg: float    # from slope = -2 sin(delta/2), the extraction relation
    delta_first_order_deg: float   # from slope = sin(delta), the transformation's own first order

    def to_angles(self) -> QpgAngles:
        return QpgAngles(
            phi_a_deg=self.intercept_deg,
            phi_b_deg=0.0,
            delta_deg=self.delta_deg,
            delta_unc_deg=self.delta_unc_deg,
        )


def slope_extract_delta(
    curve: list[tuple[float, float]],
    max_m: float = 0.3,
    exact_oracle: bool = False,
) -> SlopeExtraction:
    """Straight-line fit of (photon number, phase in degrees) and slope inversion.

    Points with photon number above ``max_m`` are excluded (the relation is
    an initial-slope statement).  By default the slope s (radians/photon)
    is inverted through s = -2 sin(delta/2); with ``exact_oracle=True`` it
    is inverted through the transformation's own first-order reduced-state
    slope s = sin(delta).  Both inversions are reported.
    """
    pts = [(float(m), float(ph)) for m, ph in curve if float(m) <= max_m]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 points with photon number <= {max_m}, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    sxx = float(np.sum((x - x.mean()) ** 2))
    if float(np.ptp(x)) == 0.0:
        raise InsufficientDataError("all points share one photon number; slope is undefined")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = max(1, len(pts) - 2)
    slope_var = float(resid @ resid) / dof / sxx
    slope_unc = math.sqrt(slope_var)

    s_rad = math.radians(slope)
    s_unc_rad = math.radians(slope_unc)

    if abs(s_rad) / 2.0 > 1.0:
        raise NonInvertibleSlopeError(
            f"slope {slope:.3f} deg/photon exceeds the invertible range of the half-angle relation"
        )
    delta_half = -2.0 * math.asin(s_rad / 2.0)
    half_deriv = 1.0 / math.sqrt(max(1e-300, 1.0 - (s_rad / 2.0) ** 2))
    delta_half_unc = half_deriv * s_unc_rad

    if abs(s_rad) <= 1.0:
        delta_first = math.asin(s_rad)
        first_deriv = 1.0 / math.sqrt(max(1e-300, 1.0 - s_rad * s_rad))
        delta_first_unc = first_deriv * s_unc_rad
    else:
        if exact_oracle:
            raise NonInvertibleSlopeError(
                f"slope {slope:.3f} deg/photon exceeds the invertible range of the first-order relation"
            )
        delta_first, delta_first_unc = math.nan, math.nan

    if exact_oracle:
        delta, delta_unc = delta_first, delta_first_unc
    else:
        delta, delta_unc = delta_half, delta_half_unc

    return SlopeExtraction(
        delta_deg=math.degrees(delta),
        delta_unc_deg=math.degrees(delta_unc),
        slope_deg_per_photon=slope,
        slope_unc_deg_per_photon=slope_unc,
        intercept_deg=intercept,
        delta_half_angle_deg=math.degrees(delta_half),
        delta_first_order_deg=math.degrees(delta_first) if math.isfinite(delta_first) else math.nan,
    )


def truth_table(angles: QpgAngles) -> np.ndarray:
    """Diagonal unitary on the polarization basis (--, -+, +-, ++).

    diag(1, e^{i phi_b}, e^{i phi_a}, e^{i(phi_a + phi_b + delta)}).
    """
    pa = math.radians(angles.phi_a_deg)
    pb = math.radians(angles.phi_b_deg)
    d = math.radians(angles.delta_deg)
    return np.diag(np.exp(1j * np.array([0.0, pb, pa, pa + pb + d])))


def truth_table_phases_deg(angles: QpgAngles) -> list[tuple[str, float]]:
    """Basis label -> output phase in degrees, for the four polarization inputs."""
    u = truth_table(angles)
    return [(label, math.degrees(np.angle(u[i, i]))) for i, label in enumerate(POLARIZATION_LABELS)]


def read_slope_csv(path) -> list[tuple[float, float]]:
    """Read a (photon number, probe phase degrees) curve CSV."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SLOPE_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SLOPE_CSV_HEADER)}")
        return [(float(row[0]), float(row[1])) for row in reader if row]


def write_slope_csv(path, curve: list[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SLOPE_CSV_HEADER)
        for m, ph in curve:
            writer.writerow([repr(float(m)), repr(float(ph))])
