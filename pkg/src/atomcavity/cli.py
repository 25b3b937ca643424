"""Batch front door: run named experiments from a JSON config, emit CSV/JSON.

One experiment per invocation (the subcommand), all outputs written
atomically into the output directory together with a run manifest
recording the config hash, package versions, and output checksums.

Exit codes: 0 success, 2 config validation error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, entangle, masterq, qpg, response
from .errors import ConfigError
from .params import Detunings, RateSet
from .qpg import QpgAngles

EXPERIMENTS = ("response", "saturation", "kerr", "gate", "chsh", "fit", "damping")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (int, float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


class RunConfig:
    """Validated run configuration: rates, detunings, and experiment blocks."""

    def __init__(self, raw: dict, experiment: str, config_path: Path | None):
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose one of {EXPERIMENTS}")
        declared = raw.get("experiment")
        if declared is not None and declared != experiment:
            raise ConfigError(f"config declares experiment {declared!r} but {experiment!r} was invoked")
        self.experiment = experiment
        self.raw = raw
        self.config_path = config_path

        rates_block = raw.get("rates", {})
        if not isinstance(rates_block, dict):
            raise ConfigError("'rates' must be a JSON object")
        g_plus = float(rates_block.get("g_plus_mhz", 20.0))
        g_minus = rates_block.get("g_minus_mhz")
        kwargs = dict(
            kappa_mhz=float(rates_block.get("kappa_mhz", 75.0)),
            gamma_mhz=float(rates_block.get("gamma_mhz", 2.5)),
            transit_rate_mhz=float(rates_block.get("transit_rate_mhz", 0.7)),
            atom_lifetime_ns=rates_block.get("atom_lifetime_ns"),
        )
        try:
            if g_minus is None:
                self.rates = RateSet.cesium_default(
                    g_plus_mhz=g_plus,
                    kappa_mhz=kwargs["kappa_mhz"],
                    gamma_mhz=kwargs["gamma_mhz"],
                    transit_rate_mhz=kwargs["transit_rate_mhz"],
                    atom_lifetime_ns=kwargs["atom_lifetime_ns"] or 32.0,
                )
            else:
                self.rates = RateSet(g_plus_mhz=g_plus, g_minus_mhz=float(g_minus), **kwargs)
        except ValueError as exc:
            raise ConfigError(f"invalid rates: {exc}") from exc

        det = raw.get("detunings", {})
        try:
            self.detunings = Detunings(
                probe_offset_mhz=float(det.get("probe_offset_mhz", 0.0)),
                pump_offset_mhz=float(det.get("pump_offset_mhz", 0.0)),
                atom_cavity_offset_mhz=float(det.get("atom_cavity_offset_mhz", 0.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid detunings: {exc}") from exc

        self.mean_atoms = float(raw.get("mean_atoms", 1.0))
        if self.mean_atoms < 0:
            raise ConfigError("mean_atoms must be >= 0")
        self.seed = int(raw.get("seed", 0))
        self.n_max = int(raw.get("n_max", 3))
        self.phase_sign = int(raw.get("phase_sign", 1))
        if self.phase_sign not in (1, -1):
            raise ConfigError("phase_sign must be +1 or -1")
        self.exact_oracle = bool(raw.get("exact_oracle", False))
        self.block = raw.get(experiment, {})
        if not isinstance(self.block, dict):
            raise ConfigError(f"'{experiment}' block must be a JSON object")

        # every referenced input file must exist at load time
        for key in ("data_csv", "curve_csv"):
            ref = self.block.get(key)
            if ref is not None:
                p = self._resolve(ref)
                if not p.is_file():
                    raise ConfigError(f"referenced input file does not exist: {p}")

    def _resolve(self, ref: str) -> Path:
        p = Path(ref)
        if not p.is_absolute() and self.config_path is not None:
            p = self.config_path.parent / p
        return p

    def angles(self) -> QpgAngles:
        return QpgAngles(
            phi_a_deg=float(self.block.get("phi_a_deg", 17.5)),
            phi_b_deg=float(self.block.get("phi_b_deg", 12.5)),
            delta_deg=float(self.block.get("delta_deg", 16.0)),
        )

    def grid(self, lo_key, hi_key, pts_key, lo_default, hi_default, pts_default):
        lo = float(self.block.get(lo_key, lo_default))
        hi = float(self.block.get(hi_key, hi_default))
        pts = int(self.block.get(pts_key, pts_default))
        if pts < 1:
            raise ConfigError(f"{pts_key} must be >= 1")
        return np.linspace(lo, hi, pts)


def _run_response(cfg: RunConfig) -> dict[str, str]:
    grid = cfg.grid("omega_min_mhz", "omega_max_mhz", "points", -60.0, 60.0, 41)
    samples = response.response_curve(
        grid, cfg.rates, cfg.mean_atoms, cfg.detunings.atom_cavity_offset_mhz, phase_sign=cfg.phase_sign
    )
    rows = [(s.omega_mhz, s.transmission, s.phase_deg) for s in samples]
    return {"response.csv": _csv_text(response.CSV_HEADER, rows)}


def _run_saturation(cfg: RunConfig) -> dict[str, str]:
    model = masterq.AtomCavityModel(
        rates=cfg.rates,
        detunings=cfg.detunings,
        mean_atoms=cfg.mean_atoms,
        n_max=int(cfg.block.get("n_max", cfg.n_max)),
    )
    grid = cfg.grid("drive_min_mhz", "drive_max_mhz", "points", 0.0, 40.0, 9)
    curve = masterq.saturation_curve(model, grid)
    return {"saturation.csv": _csv_text(["m_a", "transmission"], curve)}


def _run_kerr(cfg: RunConfig) -> dict[str, str]:
    curve_csv = cfg.block.get("curve_csv")
    if curve_csv is not None:
        rows = qpg.read_slope_csv(cfg._resolve(curve_csv))
    else:
        pump_pol = str(cfg.block.get("pump_polarization", "plus"))
        if pump_pol not in ("plus", "minus"):
            raise ConfigError("pump_polarization must be 'plus' or 'minus'")
        model = masterq.AtomCavityModel(
            rates=cfg.rates,
            detunings=cfg.detunings,
            mean_atoms=cfg.mean_atoms,
            n_max=int(cfg.block.get("n_max", cfg.n_max)),
            include_sigma_minus_mode=(pump_pol == "minus"),
        )
        grid = cfg.grid("pump_drive_min_mhz", "pump_drive_max_mhz", "points", 0.0, 48.0, 9)
        curve = masterq.kerr_curve(model, grid, pump_polarization=pump_pol)
        rows = [(m, cfg.phase_sign * ph) for m, ph in curve]

    outputs = {"kerr.csv": _csv_text(qpg.SLOPE_CSV_HEADER, rows)}
    max_m = float(cfg.block.get("slope_max_m", 0.3))
    try:
        extraction = qpg.slope_extract_delta(rows, max_m=max_m, exact_oracle=cfg.exact_oracle)
    except (ValueError, ArithmeticError):
        extraction = None
    if extraction is not None:
        payload = {
            "delta_deg": extraction.delta_deg,
            "delta_unc_deg": extraction.delta_unc_deg,
            "delta_half_angle_deg": extraction.delta_half_angle_deg,
            "delta_first_order_deg": extraction.delta_first_order_deg,
            "slope_deg_per_photon": extraction.slope_deg_per_photon,
            "slope_unc_deg_per_photon": extraction.slope_unc_deg_per_photon,
            "intercept_deg": extraction.intercept_deg,
            "exact_oracle": cfg.exact_oracle,
            "slope_max_m": max_m,
        }
        outputs["kerr_delta.json"] = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return outputs


def _run_gate(cfg: RunConfig) -> dict[str, str]:
    table = qpg.truth_table_phases_deg(cfg.angles())
    return {"truth_table.csv": _csv_text(["basis", "phase_deg"], table)}


def _run_chsh(cfg: RunConfig) -> dict[str, str]:
    angles = cfg.angles()
    state = entangle.qpg_plus_plus_output(angles)
    rho = state.ket().to_density()
    mask_d = cfg.block.get("mask_d")
    physical = True
    if mask_d is not None:
        masked = entangle.apply_mask(rho, entangle.DecoherenceMask.uniform(float(mask_d)))
        rho, physical = masked.rho, masked.physical
    report = entangle.chsh_max(rho, require_physical=False)
    payload = {
        "delta_deg": angles.delta_deg,
        "phi_a_deg": angles.phi_a_deg,
        "phi_b_deg": angles.phi_b_deg,
        "mask_d": mask_d,
        "physical": physical,
        "s_max": report.s_max,
        "s_max_formula": entangle.chsh_formula(angles.delta_deg) if mask_d is None else None,
        "violating": report.violating,
        "concurrence": entangle.concurrence(rho),
        "alice_settings": [list(map(float, v)) for v in report.alice_settings],
        "bob_settings": [list(map(float, v)) for v in report.bob_settings],
    }
    return {"chsh.json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}


def _run_fit(cfg: RunConfig) -> dict[str, str]:
    synth = cfg.block.get("synthesize")
    if synth is not None:
        grid = np.linspace(
            float(synth.get("omega_min_mhz", -60.0)),
            float(synth.get("omega_max_mhz", 60.0)),
            int(synth.get("points", 41)),
        )
        samples = response.synthesize_noisy_curve(
            cfg.rates,
            float(synth.get("mean_atoms", 1.0)),
            grid,
            sigma_t=float(synth.get("sigma_t", 0.02)),
            sigma_phi_deg=float(synth.get("sigma_phi_deg", 1.0)),
            seed=cfg.seed,
        )
    else:
        data_csv = cfg.block.get("data_csv")
        if data_csv is None:
            raise ConfigError("fit needs either 'data_csv' or a 'synthesize' block")
        samples = response.read_samples_csv(cfg._resolve(data_csv))
    result = response.fit_atom_number(
        samples,
        cfg.rates,
        initial_guess=float(cfg.block.get("initial_guess", 1.0)),
        atom_cavity_offset_mhz=cfg.detunings.atom_cavity_offset_mhz,
    )
    payload = {
        "mean_atoms": result.mean_atoms,
        "std_error": result.std_error,
        "residual_norm": result.residual_norm,
        "converged": result.converged,
        "iterations": result.iterations,
        "n_samples": len(samples),
    }
    return {"fit.json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}


def _run_damping(cfg: RunConfig) -> dict[str, str]:
    family_name = str(cfg.block.get("family", "uniform"))
    family = entangle.MASK_FAMILIES.get(family_name)
    if family is None:
        raise ConfigError(f"unknown mask family {family_name!r}; choose from {sorted(entangle.MASK_FAMILIES)}")
    grid = cfg.grid("d_min", "d_max", "points", 0.0, 1.0, 21)
    curve = entangle.violation_vs_damping(cfg.angles(), family, grid)
    return {"damping.csv": _csv_text(["d", "s_max"], curve)}


_RUNNERS = {
    "response": _run_response,
    "saturation": _run_saturation,
    "kerr": _run_kerr,
    "gate": _run_gate,
    "chsh": _run_chsh,
    "fit": _run_fit,
    "damping": _run_damping,
}


def run(cfg: RunConfig, out_dir: Path) -> list[Path]:
    """Execute the experiment and write its outputs plus a manifest."""
    outputs = _RUNNERS[cfg.experiment](cfg)
    written = []
    for name, text in sorted(outputs.items()):
        path = out_dir / name
        _atomic_write_text(path, text)
        written.append(path)

    config_bytes = json.dumps(cfg.raw, sort_keys=True).encode()
    manifest = {
        "experiment": cfg.experiment,
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "seed": cfg.seed,
        "versions": {
            "atomcavity": __version__,
            "numpy": np.__version__,
        },
        "outputs": {p.name: _sha256_file(p) for p in written},
    }
    manifest_path = out_dir / "manifest.json"
    _atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(manifest_path)
    return written


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomcavity",
        description="Atom-cavity simulator experiments; outputs CSV/JSON plus a run manifest.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    descriptions = {
        "response": "weak-field transmission/phase curve vs probe detuning",
        "saturation": "transmission vs intracavity photon number for a swept drive",
        "kerr": "probe phase shift vs pump photon number (conditional dispersion)",
        "gate": "phase-gate truth table for given angles",
        "chsh": "maximal CHSH sum of the gate output (optionally masked)",
        "fit": "least-squares atom-number fit of response data",
        "damping": "CHSH sum vs coherence damping along a mask family",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--n-max", type=int, default=None, help="override Fock truncation")
        p.add_argument("--phase-sign", type=int, choices=(1, -1), default=None, help="sign of reported phases")
        p.add_argument("--exact-oracle", action="store_true", help="use the first-order reduced-state slope relation")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(Path(args.config).read_text())
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            except json.JSONDecodeError as exc:
                print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
                return EXIT_CONFIG
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.n_max is not None:
            raw["n_max"] = args.n_max
        if args.phase_sign is not None:
            raw["phase_sign"] = args.phase_sign
        if args.exact_oracle:
            raw["exact_oracle"] = True
        cfg = RunConfig(raw, args.experiment, args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        written = run(cfg, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # numerical failures from the solvers
        print(f"error: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
