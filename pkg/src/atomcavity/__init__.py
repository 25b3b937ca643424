"""Single-atom cavity QED simulator.

Models the weak-field transmission and birefringence of one atom coupled
to a two-polarization optical cavity, the single-photon-level Kerr phase
shifts between pump and probe beams, the resulting conditional-phase gate
truth table, and CHSH entanglement of the gate output under
phenomenological decoherence.
"""

__version__ = "0.1.0"

from .entangle import (
    ChshReport,
    DecoherenceMask,
    MaskedState,
    apply_mask,
    chsh_formula,
    chsh_max,
    concurrence,
    qpg_plus_plus_output,
    violation_vs_damping,
)
from .masterq import (
    AtomCavityModel,
    SteadyObservables,
    build_liouvillian,
    kerr_curve,
    probe_susceptibility,
    saturation_curve,
    steady_state,
)
from .params import Detunings, DerivedQuantities, RateSet, Regime, classify, derive
from .qlinalg import DensityMatrix, KetState, dagger, expectation, kron, partial_trace, steady_null_solve
from .qpg import (
    PhaseTable,
    QpgAngles,
    SlopeExtraction,
    TwoModeState,
    apply_ansatz,
    coherent_output,
    reduced_probe_phase,
    slope_extract_delta,
    truth_table,
)
from .response import (
    FitResult,
    PolarizationReadout,
    ResponseSample,
    coupled_amplitude,
    fit_atom_number,
    polarization_readout,
    response_curve,
)
