"""Truncated-Fock-space Lindblad model of the driven atom-cavity system.

The atom is a three-level system: ground |g>, excited |e+> reached by the
sigma+ cavity mode with coupling g_plus, and excited |e-> reached by the
sigma- mode with coupling g_minus.  Both excited levels decay to |g> at the
transverse rate gamma; each cavity mode decays at kappa.  Collapse
operators are sqrt(2*kappa)a and sqrt(2*gamma)|g><e|, so kappa and gamma
are amplitude (half-width) decay rates, matching the analytic weak-field
response denominators (kappa - i*Omega)(gamma - i*Omega).

Everything is assembled in the frame rotating at the static drive (pump)
frequency, in angular units of rad/us; the mean atom number enters as an
effective collective coupling sqrt(N)*g, the standard weak-excitation
equivalence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import qlinalg
from .errors import (
    InvalidParameterError,
    LiouvillianSizeError,
    ResolventConditioningError,
    TruncationError,
    TruncationWarning,
)
from .params import TWO_PI, Detunings, RateSet
from .qlinalg import DensityMatrix, dagger, expectation, kron, steady_null_solve, vec

# refuse superoperators beyond this Hilbert-space size
_MAX_HILBERT_SQ = 10_000_000

TOP_LEVEL_WARN = 1e-3
TOP_LEVEL_ERROR = 1e-2

# atomic level order: ground, excited(+), excited(-)
_N_ATOM = 3


@dataclass(frozen=True)
class AtomCavityModel:
    """One configuration of the driven atom-cavity system.

    The static drives sit at ``detunings.pump_offset_mhz`` from the cavity
    resonance (for single-beam experiments, set the beam's detuning there).
    ``drive_plus_mhz``/``drive_minus_mhz`` are complex drive amplitudes in
    MHz acting on the sigma+/sigma- cavity modes.  With
    ``include_sigma_minus_mode=False`` the sigma- mode is dropped from the
    Hilbert space and treated as an uncoupled, empty cavity.
    """

    rates: RateSet
    detunings: Detunings = field(default_factory=Detunings)
    mean_atoms: float = 1.0
    n_max: int = 3
    include_sigma_minus_mode: bool = False
    drive_plus_mhz: complex = 0.0
    drive_minus_mhz: complex = 0.0
    include_transit_dephasing: bool = False

    def __post_init__(self):
        if self.n_max < 1:
            raise InvalidParameterError(f"n_max must be >= 1, got {self.n_max}")
        if self.mean_atoms < 0.0 or not math.isfinite(self.mean_atoms):
            raise InvalidParameterError(f"mean_atoms must be >= 0, got {self.mean_atoms}")
        for name in ("drive_plus_mhz", "drive_minus_mhz"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")

    @property
    def modes(self) -> int:
        return 2 if self.include_sigma_minus_mode else 1

    @property
    def hilbert_dim(self) -> int:
        return _N_ATOM * (self.n_max + 1) ** self.modes

    @property
    def subsystem_dims(self) -> tuple[int, ...]:
        if self.include_sigma_minus_mode:
            return (_N_ATOM, self.n_max + 1, self.n_max + 1)
        return (_N_ATOM, self.n_max + 1)


@dataclass(frozen=True)
class SteadyObservables:
    """Field and atom observables of one steady state."""

    m_plus: float
    m_minus: float
    amp_plus: complex
    amp_minus: complex
    atom_excitation: float
    top_fock_population: float   # truncation diagnostic, max over included modes


class _Operators:
    """Dense operators on the model's Hilbert space."""

    def __init__(self, model: AtomCavityModel):
        nph = model.n_max + 1
        a1 = np.diag(np.sqrt(np.arange(1, nph, dtype=float)), 1).astype(complex)
        i_atom = np.eye(_N_ATOM, dtype=complex)
        i_ph = np.eye(nph, dtype=complex)
        lower_p = np.zeros((_N_ATOM, _N_ATOM), dtype=complex)
        lower_p[0, 1] = 1.0            # |g><e+|
        lower_m = np.zeros((_N_ATOM, _N_ATOM), dtype=complex)
        lower_m[0, 2] = 1.0            # |g><e->
        proj_exc = np.diag([0.0, 1.0, 1.0]).astype(complex)
        top = np.zeros((nph, nph), dtype=complex)
        top[nph - 1, nph - 1] = 1.0

        if model.include_sigma_minus_mode:
            self.a_plus = kron(kron(i_atom, a1), i_ph)
            self.a_minus = kron(kron(i_atom, i_ph), a1)
            self.sigma_p = kron(kron(lower_p, i_ph), i_ph)
            self.sigma_m = kron(kron(lower_m, i_ph), i_ph)
            self.proj_exc = kron(kron(proj_exc, i_ph), i_ph)
            self.top_plus = kron(kron(i_atom, top), i_ph)
            self.top_minus = kron(kron(i_atom, i_ph), top)
        else:
            self.a_plus = kron(i_atom, a1)
            self.a_minus = None
            self.sigma_p = kron(lower_p, i_ph)
            self.sigma_m = kron(lower_m, i_ph)
            self.proj_exc = kron(proj_exc, i_ph)
            self.top_plus = kron(i_atom, top)
            self.top_minus = None


def _hamiltonian_and_collapse(model: AtomCavityModel, ops: _Operators):
    r = model.rates
    d = model.detunings
    delta_c = TWO_PI * d.pump_offset_mhz
    delta_a = TWO_PI * (d.pump_offset_mhz - d.atom_cavity_offset_mhz)
    scale = math.sqrt(model.mean_atoms)
    g_p = TWO_PI * r.g_plus_mhz * scale
    g_m = TWO_PI * r.g_minus_mhz * scale
    kappa = TWO_PI * r.kappa_mhz
    gamma = TWO_PI * r.gamma_mhz

    ap = ops.a_plus
    h = -delta_c * (dagger(ap) @ ap) - delta_a * ops.proj_exc
    h = h + g_p * (dagger(ap) @ ops.sigma_p + dagger(ops.sigma_p) @ ap)
    eps_p = TWO_PI * complex(model.drive_plus_mhz)
    h = h + eps_p * dagger(ap) + np.conj(eps_p) * ap

    c_ops = [
        np.sqrt(2.0 * kappa) * ap,
        np.sqrt(2.0 * gamma) * ops.sigma_p,
        np.sqrt(2.0 * gamma) * ops.sigma_m,
    ]

    if model.include_sigma_minus_mode:
        am = ops.a_minus
        h = h - delta_c * (dagger(am) @ am)
        h = h + g_m * (dagger(am) @ ops.sigma_m + dagger(ops.sigma_m) @ am)
        eps_m = TWO_PI * complex(model.drive_minus_mhz)
        h = h + eps_m * dagger(am) + np.conj(eps_m) * am
        c_ops.append(np.sqrt(2.0 * kappa) * am)

    if model.include_transit_dephasing:
        gamma_t = TWO_PI * r.transit_rate_mhz
        c_ops.append(np.sqrt(2.0 * gamma_t) * ops.proj_exc)

    return h, c_ops


def liouvillian_matrix(h: np.ndarray, c_ops) -> np.ndarray:
    """Lindblad generator as a dense superoperator on column-stacked states."""
    n = h.shape[0]
    eye = np.eye(n, dtype=complex)
    L = -1j * (kron(eye, h) - kron(h.T, eye))
    for c in c_ops:
        cd = dagger(c)
        cdc = cd @ c
        L += kron(np.conj(c), c) - 0.5 * kron(eye, cdc) - 0.5 * kron(cdc.T, eye)
    return L


def build_liouvillian(model: AtomCavityModel) -> np.ndarray:
    """Superoperator of the full model; dimension (D^2, D^2) with D the Hilbert dimension."""
    dim = model.hilbert_dim
    if dim * dim > _MAX_HILBERT_SQ:
        raise LiouvillianSizeError(
            f"superoperator dimension {dim * dim} exceeds the dense-size guard {_MAX_HILBERT_SQ}"
        )
    ops = _Operators(model)
    h, c_ops = _hamiltonian_and_collapse(model, ops)
    return liouvillian_matrix(h, c_ops)


def _empty_cavity_amplitude(model: AtomCavityModel, drive_mhz: complex) -> complex:
    """Analytic steady amplitude of a driven empty cavity in the drive frame."""
    kappa = TWO_PI * model.rates.kappa_mhz
    delta_c = TWO_PI * model.detunings.pump_offset_mhz
    return -1j * TWO_PI * complex(drive_mhz) / (kappa - 1j * delta_c)


def _observables(model: AtomCavityModel, ops: _Operators, rho: DensityMatrix) -> SteadyObservables:
    ap = ops.a_plus
    m_plus = float(np.real(expectation(rho, dagger(ap) @ ap)))
    amp_plus = expectation(rho, ap)
    top = float(np.real(expectation(rho, ops.top_plus)))
    if model.include_sigma_minus_mode:
        am = ops.a_minus
        m_minus = float(np.real(expectation(rho, dagger(am) @ am)))
        amp_minus = expectation(rho, am)
        top = max(top, float(np.real(expectation(rho, ops.top_minus))))
    else:
        # excluded mode behaves as an uncoupled empty cavity under its drive
        amp_minus = _empty_cavity_amplitude(model, model.drive_minus_mhz)
        m_minus = abs(amp_minus) ** 2
    excitation = float(np.real(expectation(rho, ops.proj_exc)))
    return SteadyObservables(
        m_plus=m_plus,
        m_minus=m_minus,
        amp_plus=amp_plus,
        amp_minus=amp_minus,
        atom_excitation=excitation,
        top_fock_population=top,
    )


def steady_state(model: AtomCavityModel) -> tuple[DensityMatrix, SteadyObservables]:
    """Steady state of the model and its observables.

    Emits TruncationWarning when the top Fock level of any included mode
    holds more than 1e-3 population.
    """
    dim = model.hilbert_dim
    if dim * dim > _MAX_HILBERT_SQ:
        raise LiouvillianSizeError(
            f"superoperator dimension {dim * dim} exceeds the dense-size guard {_MAX_HILBERT_SQ}"
        )
    ops = _Operators(model)
    h, c_ops = _hamiltonian_and_collapse(model, ops)
    L = liouvillian_matrix(h, c_ops)
    rho = steady_null_solve(L, dims=model.subsystem_dims)
    obs = _observables(model, ops, rho)
    if obs.top_fock_population > TOP_LEVEL_WARN:
        warnings.warn(
            f"top Fock level holds {obs.top_fock_population:.2e} population at n_max={model.n_max}; "
            "results may be truncation-limited",
            TruncationWarning,
            stacklevel=2,
        )
    return rho, obs


def saturation_curve(model: AtomCavityModel, drive_grid_mhz) -> list[tuple[float, float]]:
    """Transmission vs intracavity photon number for a swept single-beam drive.

    Each point solves the steady state at that drive amplitude on the
    sigma+ mode; the transmission is |<a>|^2 normalized to the analytic
    empty-cavity value at equal drive.  A drive of exactly zero is
    evaluated at a machine-small amplitude, giving the weak-field limit.
    Raises TruncationError when the top Fock level exceeds 1e-2.
    """
    out = []
    for drive in drive_grid_mhz:
        drive = complex(drive)
        if drive == 0:
            drive = complex(1e-5 * model.rates.kappa_mhz)
        m = replace(model, drive_plus_mhz=drive)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            rho, obs = steady_state(m)
        if obs.top_fock_population > TOP_LEVEL_ERROR:
            raise TruncationError(
                f"top Fock population {obs.top_fock_population:.2e} at drive {abs(drive):.3g} MHz; "
                f"raise n_max above {model.n_max}"
            )
        amp_empty = _empty_cavity_amplitude(m, drive)
        t_a = abs(obs.amp_plus) ** 2 / abs(amp_empty) ** 2
        out.append((obs.m_plus, t_a))
    return out


def probe_susceptibility(
    model: AtomCavityModel,
    probe_polarization: str = "plus",
    probe_offset_mhz: float | None = None,
) -> complex:
    """Normalized linear response of a weak probe on top of the pump steady state.

    Solves the pump-only steady state, then the first-order sideband
    component at the pump-probe difference frequency from the shifted
    generator (L + i*delta).  The result is normalized to the analytic
    empty-cavity probe response, so it reduces to the weak-field
    transmission amplitude when the pump is off; the probe phase shift is
    its argument.
    """
    if probe_polarization not in ("plus", "minus"):
        raise InvalidParameterError(f"probe_polarization must be 'plus' or 'minus', got {probe_polarization!r}")
    if probe_offset_mhz is None:
        probe_offset_mhz = model.detunings.probe_offset_mhz

    if probe_polarization == "minus" and not model.include_sigma_minus_mode:
        # excluded mode: probe sees an uncoupled empty cavity
        return 1.0 + 0j

    ops = _Operators(model)
    h, c_ops = _hamiltonian_and_collapse(model, ops)
    L = liouvillian_matrix(h, c_ops)
    rho = steady_null_solve(L, dims=model.subsystem_dims)
    return _probe_response(model, L, rho, ops, probe_polarization, probe_offset_mhz)


def _probe_response(
    model: AtomCavityModel,
    L: np.ndarray,
    rho: DensityMatrix,
    ops: _Operators,
    probe_polarization: str,
    probe_offset_mhz: float,
) -> complex:
    delta = TWO_PI * (probe_offset_mhz - model.detunings.pump_offset_mhz)
    if abs(delta) < 1e-12:
        raise ResolventConditioningError(
            "probe frequency coincides with the pump; the shifted generator is singular"
        )

    a_probe = ops.a_plus if probe_polarization == "plus" else ops.a_minus
    ad = dagger(a_probe)
    # first-order source term +i[a^dag, rho_ss] for unit probe amplitude
    rhs = vec(1j * (ad @ rho.data - rho.data @ ad))
    n2 = L.shape[0]
    shifted = L + 1j * delta * np.eye(n2, dtype=complex)
    try:
        x = np.linalg.solve(shifted, rhs)
    except np.linalg.LinAlgError as exc:
        raise ResolventConditioningError(f"shifted generator is singular: {exc}") from exc
    resid = float(np.linalg.norm(shifted @ x - rhs))
    scale = float(np.linalg.norm(rhs))
    if scale > 0 and resid > 1e-6 * scale:
        raise ResolventConditioningError(
            f"resolvent solve residual {resid:.3e} exceeds 1e-6 * ||rhs|| = {1e-6 * scale:.3e}"
        )
    sideband = qlinalg.unvec(x, model.hilbert_dim)
    amp = complex(np.trace(a_probe @ sideband))

    kappa = TWO_PI * model.rates.kappa_mhz
    amp_empty = -1j / (kappa - 1j * TWO_PI * probe_offset_mhz)
    return amp / amp_empty


def kerr_curve(
    model: AtomCavityModel,
    pump_drive_grid_mhz,
    pump_polarization: str = "plus",
    probe_polarization: str = "plus",
) -> list[tuple[float, float]]:
    """Probe phase shift vs pump intracavity photon number.

    For each pump drive amplitude: solve the pump-only steady state, read
    the pump photon number from it, and compute the probe phase from the
    linearized susceptibility at the probe detuning in the model.
    """
    if pump_polarization not in ("plus", "minus"):
        raise InvalidParameterError(f"pump_polarization must be 'plus' or 'minus', got {pump_polarization!r}")
    if pump_polarization == "minus" and not model.include_sigma_minus_mode:
        raise InvalidParameterError("sigma- pump requires include_sigma_minus_mode=True")
    if probe_polarization == "minus" and not model.include_sigma_minus_mode:
        raise InvalidParameterError("sigma- probe requires include_sigma_minus_mode=True")
    out = []
    for drive in pump_drive_grid_mhz:
        drive = complex(drive)
        if pump_polarization == "plus":
            m = replace(model, drive_plus_mhz=drive, drive_minus_mhz=0.0)
        else:
            m = replace(model, drive_minus_mhz=drive, drive_plus_mhz=0.0)
        ops = _Operators(m)
        h, c_ops = _hamiltonian_and_collapse(m, ops)
        L = liouvillian_matrix(h, c_ops)
        rho = steady_null_solve(L, dims=m.subsystem_dims)
        obs = _observables(m, ops, rho)
        m_pump = obs.m_plus if pump_polarization == "plus" else obs.m_minus
        t_probe = _probe_response(m, L, rho, ops, probe_polarization, m.detunings.probe_offset_mhz)
        out.append((m_pump, math.degrees(np.angle(t_probe))))
    return out
