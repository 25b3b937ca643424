"""Weak-field transmission and phase of the coupled atom-cavity system.

The normalized transmission amplitude for a probe detuned by Omega from the
cavity resonance, with N effective atoms on the strong transition, is

    t(Omega) = D / (D + N * g^2),   D = (kappa - i*Omega_c) * (gamma - i*Omega_a)

in angular-frequency units (every linear-MHz rate multiplied by 2pi;
Omega_c and Omega_a are the detunings from the cavity and atomic
resonances).  t -> 1 for an empty cavity and far off resonance; the
resonant transmitted power ratio is (1 + 2C)^-2 with cooperativity
C = N g^2 / (2 kappa gamma).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, UndefinedPolarizationError
from .params import TWO_PI, RateSet

GN_MAX_ITERATIONS = 200
GN_STEP_TOL = 1e-9

CSV_HEADER = ["omega_mhz", "transmission", "phase_deg"]
CSV_HEADER_WEIGHTED = CSV_HEADER + ["weight_t", "weight_phi"]


@dataclass(frozen=True)
class ResponseSample:
    """One probe-detuning point of a transmission/phase scan."""

    omega_mhz: float
    transmission: float        # power ratio, atoms present / empty cavity
    phase_deg: float           # differential phase between circular components
    weight_t: float = 1.0
    weight_phi: float = 1.0

    def __post_init__(self):
        if self.transmission < 0.0:
            raise ValueError(f"transmission must be >= 0, got {self.transmission}")


@dataclass(frozen=True)
class PolarizationReadout:
    rotation_deg: float        # major-axis rotation of the output ellipse
    amplitude_ratio: float     # |sigma+ out| / |sigma- out|


@dataclass(frozen=True)
class FitResult:
    mean_atoms: float
    std_error: float
    residual_norm: float
    converged: bool
    iterations: int


def coupled_amplitude(
    omega_mhz: float,
    rates: RateSet,
    mean_atoms: float,
    atom_cavity_offset_mhz: float = 0.0,
) -> complex:
    """Normalized probe transmission amplitude t(Omega).

    |t|^2 is the transmitted power ratio and arg(t) the probe phase shift
    (e^{-i omega t} time convention).
    """
    if mean_atoms == 0.0:
        return 1.0 + 0.0j
    kt = TWO_PI * rates.kappa_mhz
    gt = TWO_PI * rates.gamma_mhz
    ct = TWO_PI * rates.g_plus_mhz
    om_c = TWO_PI * omega_mhz
    om_a = TWO_PI * (omega_mhz - atom_cavity_offset_mhz)
    d = (kt - 1j * om_c) * (gt - 1j * om_a)
    return d / (d + mean_atoms * ct * ct)


def response_curve(
    omega_grid_mhz,
    rates: RateSet,
    mean_atoms: float,
    atom_cavity_offset_mhz: float = 0.0,
    phase_sign: int = 1,
) -> list[ResponseSample]:
    """Evaluate the model on a detuning grid, one sample per grid point."""
    out = []
    for om in omega_grid_mhz:
        t = coupled_amplitude(float(om), rates, mean_atoms, atom_cavity_offset_mhz)
        out.append(
            ResponseSample(
                omega_mhz=float(om),
                transmission=abs(t) ** 2,
                phase_deg=phase_sign * math.degrees(np.angle(t)),
            )
        )
    return out


def polarization_readout(sigma_plus_amp: complex, sigma_minus_amp: complex) -> PolarizationReadout:
    """Rotation and amplitude ratio of the output polarization ellipse.

    The major axis rotates by half the differential phase between the two
    circular components, mapped to (-90, 90] degrees.
    """
    ap, am = complex(sigma_plus_amp), complex(sigma_minus_amp)
    if ap == 0 and am == 0:
        raise UndefinedPolarizationError("both circular components vanish")
    if ap == 0 or am == 0:
        # a single circular component carries no differential phase
        ratio = 0.0 if ap == 0 else math.inf
        return PolarizationReadout(rotation_deg=0.0, amplitude_ratio=ratio)
    dphi = math.degrees(np.angle(ap) - np.angle(am))
    dphi = (dphi + 180.0) % 360.0 - 180.0   # wrap to (-180, 180]
    if dphi == -180.0:
        dphi = 180.0
    return PolarizationReadout(rotation_deg=dphi / 2.0, amplitude_ratio=abs(ap) / abs(am))


def _residuals(samples, rates, mean_atoms, atom_cavity_offset_mhz=0.0):
    """Stacked residual vector over the transmission and phase channels (phase in radians)."""
    res = np.empty(2 * len(samples))
    for i, s in enumerate(samples):
        t = coupled_amplitude(s.omega_mhz, rates, mean_atoms, atom_cavity_offset_mhz)
        res[2 * i] = s.weight_t * (abs(t) ** 2 - s.transmission)
        res[2 * i + 1] = s.weight_phi * (float(np.angle(t)) - math.radians(s.phase_deg))
    return res


def _damped_gauss_newton(residual_fn, p0, lower, max_iterations):
    """Levenberg-damped Gauss-Newton with a forward-difference Jacobian.

    Returns (params, covariance_unscaled, cost, converged, iterations).
    covariance_unscaled is (J^T J)^-1 (or inf entries if degenerate).
    """
    p = np.maximum(np.asarray(p0, dtype=float), lower)
    k = p.size
    lam = 1e-3
    res = residual_fn(p)
    cost = float(res @ res)
    converged = False
    iterations = 0
    jtj = np.zeros((k, k))

    for iterations in range(1, max_iterations + 1):
        jac = np.empty((res.size, k))
        for j in range(k):
            h = 1e-7 * max(1.0, abs(p[j]))
            pj = p.copy()
            pj[j] += h
            jac[:, j] = (residual_fn(pj) - res) / h
        jtj = jac.T @ jac
        grad = jac.T @ res
        if not np.any(jtj):
            break
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = np.maximum(p + step, lower)
            res_new = residual_fn(p_new)
            cost_new = float(res_new @ res_new)
            if cost_new <= cost:
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True
            break
        moved = float(np.max(np.abs(p_new - p) / np.maximum(1.0, np.abs(p_new))))
        p, res, cost = p_new, res_new, cost_new
        if moved <= GN_STEP_TOL:
            converged = True
            break

    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.full((k, k), math.inf)
    return p, cov, cost, converged, iterations


def fit_atom_number(
    samples: list[ResponseSample],
    rates: RateSet,
    initial_guess: float = 1.0,
    atom_cavity_offset_mhz: float = 0.0,
    max_iterations: int = GN_MAX_ITERATIONS,
) -> FitResult:
    """Least-squares estimate of the mean atom number from a response scan.

    Minimizes the summed squared residuals over both channels (transmission
    dimensionless, phase in radians, per-sample weights applied) with a
    damped Gauss-Newton iteration.  The standard error comes from the
    Gauss-Newton curvature at the optimum.
    """
    if len(samples) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(samples)}")

    def residual_fn(p):
        return _residuals(samples, rates, p[0], atom_cavity_offset_mhz)

    p, cov, cost, converged, iterations = _damped_gauss_newton(
        residual_fn, [initial_guess], lower=np.array([0.0]), max_iterations=max_iterations
    )
    dof = max(1, 2 * len(samples) - 1)
    variance = cost / dof
    c00 = float(cov[0, 0])
    std_error = math.sqrt(variance * c00) if math.isfinite(c00) and c00 > 0 else math.inf
    return FitResult(
        mean_atoms=float(p[0]),
        std_error=std_error,
        residual_norm=math.sqrt(cost),
        converged=converged,
        iterations=iterations,
    )


@dataclass(frozen=True)
class ExtendedFitResult:
    """Joint fit of atom number together with the coupling and cavity rates."""

    mean_atoms: float
    g_plus_mhz: float
    kappa_mhz: float
    std_errors: tuple[float, float, float]
    residual_norm: float
    converged: bool
    iterations: int


def fit_response_extended(
    samples: list[ResponseSample],
    rates: RateSet,
    initial_guess: float = 1.0,
    atom_cavity_offset_mhz: float = 0.0,
    max_iterations: int = GN_MAX_ITERATIONS,
) -> ExtendedFitResult:
    """Fit (mean atoms, g_plus, kappa) jointly; gamma stays fixed."""
    if len(samples) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(samples)}")

    def residual_fn(p):
        trial = RateSet(
            g_plus_mhz=p[1],
            g_minus_mhz=rates.g_minus_mhz,
            kappa_mhz=p[2],
            gamma_mhz=rates.gamma_mhz,
            transit_rate_mhz=rates.transit_rate_mhz,
        )
        return _residuals(samples, trial, p[0], atom_cavity_offset_mhz)

    p0 = [initial_guess, rates.g_plus_mhz, rates.kappa_mhz]
    lower = np.array([0.0, 1e-6, 1e-6])
    p, cov, cost, converged, iterations = _damped_gauss_newton(
        residual_fn, p0, lower=lower, max_iterations=max_iterations
    )
    dof = max(1, 2 * len(samples) - 3)
    variance = cost / dof
    errs = []
    for j in range(3):
        cjj = float(cov[j, j])
        errs.append(math.sqrt(variance * cjj) if math.isfinite(cjj) and cjj > 0 else math.inf)
    return ExtendedFitResult(
        mean_atoms=float(p[0]),
        g_plus_mhz=float(p[1]),
        kappa_mhz=float(p[2]),
        std_errors=tuple(errs),
        residual_norm=math.sqrt(cost),
        converged=converged,
        iterations=iterations,
    )


def synthesize_noisy_curve(
    rates: RateSet,
    mean_atoms: float,
    omega_grid_mhz,
    sigma_t: float = 0.02,
    sigma_phi_deg: float = 1.0,
    seed: int = 0,
) -> list[ResponseSample]:
    """Model curve with seeded Gaussian noise on both channels, for fit studies."""
    rng = np.random.default_rng(seed)
    out = []
    for om in omega_grid_mhz:
        t = coupled_amplitude(float(om), rates, mean_atoms)
        out.append(
            ResponseSample(
                omega_mhz=float(om),
                transmission=max(0.0, abs(t) ** 2 + sigma_t * rng.standard_normal()),
                phase_deg=math.degrees(np.angle(t)) + sigma_phi_deg * rng.standard_normal(),
            )
        )
    return out


def write_samples_csv(path, samples: list[ResponseSample], include_weights: bool = False) -> None:
    header = CSV_HEADER_WEIGHTED if include_weights else CSV_HEADER
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in samples:
            row = [repr(s.omega_mhz), repr(s.transmission), repr(s.phase_deg)]
            if include_weights:
                row += [repr(s.weight_t), repr(s.weight_phi)]
            writer.writerow(row)


def read_samples_csv(path) -> list[ResponseSample]:
    """Read a response-sample CSV (weights columns optional)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != CSV_HEADER:
            raise ValueError(f"{path}: expected header starting with {','.join(CSV_HEADER)}")
        weighted = [h.strip() for h in header] == CSV_HEADER_WEIGHTED
        samples = []
        for row in reader:
            if not row:
                continue
            om, tr, ph = (float(x) for x in row[:3])
            if weighted:
                wt, wp = float(row[3]), float(row[4])
                samples.append(ResponseSample(om, tr, ph, wt, wp))
            else:
                samples.append(ResponseSample(om, tr, ph))
    return samples
