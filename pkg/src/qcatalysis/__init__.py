"""Simulation and homodyne tomography of photon-catalysed vacuum/single-photon superpositions."""

from .channels import (
    BeamsplitterParams,
    ExperimentParams,
    PipelineResult,
    TwoModeState,
    apply_beamsplitter,
    beamsplitter_matrix_element,
    beamsplitter_unitary,
    catalysis_pipeline,
    condition_on_click,
    dark_count_state,
    loss_channel,
    spd_povm,
    unconditioned_signal,
)
from .fock import (
    DensityMatrix,
    FockKet,
    ModeOperator,
    coherent_state,
    diagnostics,
    displacement_operator,
    fidelity,
    fock_state,
    kitten_state,
    mixed_single_photon,
    state_fidelity,
    trace_distance,
    vacuum,
)
from .homodyne import QuadratureRecord, calibrate_vacuum, sample_quadratures
from .phase_space import QuadraturePdf, WignerGrid, quadrature_pdf, wigner_from_density
from .tomography import DensityEstimate, ReconstructionSettings, fbp_wigner, pattern_density

__version__ = "0.1.0"
