"""Signal processing on cell complexes.

Edge signals on a graph whose cycles may be filled by polygonal 2-cells:
incidence algebra and Hodge Laplacians, spectral decomposition, topology
inference, sparse representation, FIR filtering, harmonic localization and
bandlimited sampling.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .complex import (
    CellComplex,
    ComplexError,
    HodgeLaplacians,
    Skeleton,
    TwoCell,
    build_b2,
    build_skeleton,
    enumerate_candidate_cells,
    fill_all,
    harmonic_dimension,
    hodge_laplacians,
)
from .spectral import (
    HodgeComponents,
    SpectralBasis,
    cft,
    eigendecompose,
    hodge_decompose,
    inverse_cft,
    spectral_basis,
)
from .inference import basis_pursuit, infer_cells, sparsity_error_curve, sweep_q_star
from .fir import MaskSpec, apply_fir, design_common, design_independent, filter_problem, gain_condition
from .harmonic import HarmonicConfig, run_algorithm1
from .sampling import make_plan, noise_mse, recover, select_band

__all__ = [
    "BACKEND", "CellComplex", "ComplexError", "HodgeLaplacians", "Skeleton", "TwoCell",
    "build_b2", "build_skeleton", "enumerate_candidate_cells", "fill_all",
    "harmonic_dimension", "hodge_laplacians", "HodgeComponents", "SpectralBasis", "cft",
    "eigendecompose", "hodge_decompose", "inverse_cft", "spectral_basis", "basis_pursuit",
    "infer_cells", "sparsity_error_curve", "sweep_q_star", "MaskSpec", "apply_fir",
    "design_common", "design_independent", "filter_problem", "gain_condition",
    "HarmonicConfig", "run_algorithm1", "make_plan", "noise_mse", "recover", "select_band",
]
