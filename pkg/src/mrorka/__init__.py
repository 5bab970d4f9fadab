"""Track moving, deforming objects across measurements.

Single-resolution extraction searches a K-approximation trellis for the best
shift path; the multiresolution solver runs the same search with unit steps
over a wavelet lowpass pyramid and can refine the path below the sample grid.
"""

from .core import (
    CouplingMatrix,
    ObjectEstimate,
    ShiftPath,
    build_coupling,
    objective,
    penalized_residual,
    recover_appearance,
    shift_columns,
)
from .kgraph import brute_force_path, build_graph, longest_path, precompute_correlations
from .multires import MultiresConfig, RefinementTrace, rescale_path, select_levels, solve_multires
from .orka import OrkaConfig, solve_greedy, solve_single

__version__ = "0.1.0"

__all__ = [
    "CouplingMatrix",
    "MultiresConfig",
    "ObjectEstimate",
    "OrkaConfig",
    "RefinementTrace",
    "ShiftPath",
    "brute_force_path",
    "build_coupling",
    "build_graph",
    "longest_path",
    "objective",
    "penalized_residual",
    "precompute_correlations",
    "recover_appearance",
    "rescale_path",
    "select_levels",
    "shift_columns",
    "solve_greedy",
    "solve_multires",
    "solve_single",
]
