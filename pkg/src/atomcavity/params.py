"""Physical rates, detunings, and derived figures of merit for one atom-cavity system.

All rates are stored as linear frequencies in MHz (the values quoted as
rate/2pi).  Formulas that need angular frequencies multiply by 2pi
internally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidParameterError

TWO_PI = 2.0 * math.pi

# ratio of the weak to the strong dipole coupling for the cesium
# (F=4,m=4) -> (F'=5) transition pair
CESIUM_G_RATIO = 1.0 / math.sqrt(45.0)


class Regime(enum.Enum):
    BAD_CAVITY = "bad_cavity"
    STRONG_COUPLING = "strong_coupling"
    OTHER = "other"


@dataclass(frozen=True)
class RateSet:
    """Coupling and decay rates of a single atom-cavity system, in MHz.

    Attributes
    ----------
    g_plus_mhz : float
        Dipole coupling rate of the strong circular transition.
    g_minus_mhz : float
        Dipole coupling rate of the weak orthogonal-circular transition.
    kappa_mhz : float
        Cavity field damping rate.
    gamma_mhz : float
        Transverse atomic decay rate into non-cavity modes.
    transit_rate_mhz : float
        Inverse atomic transit time through the cavity mode (over 2pi).
    atom_lifetime_ns : float or None
        Excited-state lifetime, informational; used only for the
        transit-angle figure of merit.
    """

    g_plus_mhz: float
    g_minus_mhz: float
    kappa_mhz: float
    gamma_mhz: float
    transit_rate_mhz: float = 0.7
    atom_lifetime_ns: float | None = None

    def __post_init__(self):
        for name in ("g_plus_mhz", "g_minus_mhz", "kappa_mhz", "gamma_mhz", "transit_rate_mhz"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidParameterError(f"{name} must be a positive finite rate, got {value!r}")
        if self.atom_lifetime_ns is not None and self.atom_lifetime_ns <= 0.0:
            raise InvalidParameterError("atom_lifetime_ns must be positive when given")

    @classmethod
    def cesium_default(
        cls,
        g_plus_mhz: float = 20.0,
        kappa_mhz: float = 75.0,
        gamma_mhz: float = 2.5,
        transit_rate_mhz: float = 0.7,
        atom_lifetime_ns: float = 32.0,
    ) -> "RateSet":
        """Rate set of the cesium experiment; g_minus = g_plus/sqrt(45) exactly."""
        return cls(
            g_plus_mhz=g_plus_mhz,
            g_minus_mhz=g_plus_mhz * CESIUM_G_RATIO,
            kappa_mhz=kappa_mhz,
            gamma_mhz=gamma_mhz,
            transit_rate_mhz=transit_rate_mhz,
            atom_lifetime_ns=atom_lifetime_ns,
        )


@dataclass(frozen=True)
class Detunings:
    """Probe/pump offsets from the cavity resonance, in MHz.

    ``atom_cavity_offset_mhz`` is the atomic resonance minus the cavity
    resonance; zero means coincident resonances.
    """

    probe_offset_mhz: float = 0.0
    pump_offset_mhz: float = 0.0
    atom_cavity_offset_mhz: float = 0.0

    def __post_init__(self):
        for name in ("probe_offset_mhz", "pump_offset_mhz", "atom_cavity_offset_mhz"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")


@dataclass(frozen=True)
class DerivedQuantities:
    """Figures of merit computed from a rate set and a mean atom number."""

    saturation_photons: float      # photon number that saturates the atomic transition
    critical_atoms: float          # atom number that appreciably alters the cavity response
    cooperativity: float
    tipping_angle_rad: float       # accumulated one-photon Rabi angle over one transit
    regime: Regime


def classify(rates: RateSet) -> Regime:
    """Classify the coupling regime from the rate ordering.

    Bad cavity: kappa > g^2/kappa > gamma (cavity decay dominates, atomic
    emission funnels into the cavity output).  Strong coupling:
    g > kappa > gamma.  The two are mutually exclusive for positive rates.
    """
    g, kappa, gamma = rates.g_plus_mhz, rates.kappa_mhz, rates.gamma_mhz
    if kappa > g * g / kappa > gamma:
        return Regime.BAD_CAVITY
    if g > kappa > gamma:
        return Regime.STRONG_COUPLING
    return Regime.OTHER


def transit_time_us(rates: RateSet) -> float:
    """Transit time in microseconds.

    Uses 7x the atomic lifetime when a lifetime is given (the beam-geometry
    definition), otherwise inverts the quoted transit rate.
    """
    if rates.atom_lifetime_ns is not None:
        return 7.0 * rates.atom_lifetime_ns * 1e-3
    return 1.0 / (TWO_PI * rates.transit_rate_mhz)


def derive(rates: RateSet, mean_atoms: float) -> DerivedQuantities:
    """Compute saturation photon number, critical atom number, cooperativity,
    transit tipping angle, and the regime classification.

    ``mean_atoms`` is the effective intracavity atom number N; the
    cooperativity is N g^2 / (2 kappa gamma).
    """
    if not math.isfinite(mean_atoms) or mean_atoms < 0.0:
        raise InvalidParameterError(f"mean_atoms must be >= 0, got {mean_atoms!r}")
    g, kappa, gamma = rates.g_plus_mhz, rates.kappa_mhz, rates.gamma_mhz
    m0 = 4.0 * gamma**2 / (3.0 * g**2)
    n0 = 2.0 * kappa * gamma / g**2
    coop = mean_atoms * g**2 / (2.0 * kappa * gamma)
    # angular-frequency convention: 2 * (2pi g) * T0
    tipping = 2.0 * (TWO_PI * g) * transit_time_us(rates)
    return DerivedQuantities(
        saturation_photons=m0,
        critical_atoms=n0,
        cooperativity=coop,
        tipping_angle_rad=tipping,
        regime=classify(rates),
    )
