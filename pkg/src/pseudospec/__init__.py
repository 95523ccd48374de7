"""Pseudospectral boundaries, Schur block refinement and fault points of small complex matrices."""

__version__ = "0.1.0"

from ._validation import Box
from .blocks import (AdjacencyGraph, BlockDecomposition, block_classes, block_diagonalize,
                     swap_adjacent, swap_kernel)
from .exceptions import *  # noqa: F401,F403
from .faults import (Bisector, Empty, FaultSample, FaultSet, Line, SinglePoint, Voronoi,
                     bidiagonal_fault_predicate, component_equivalence_check,
                     essential_fault_small, fault_line, fault_scan, interlacing_q,
                     voronoi_faults)
from .field import (SigmaField, char_det, char_det_partials, fault_indicator, grad_sn_sq,
                    sigma_profile, surface_profile)
from .io import format_matrix, matrix_to_json, parse_matrix, parse_matrix_text
from .linalg import (SchurForm, batched_singular_values, hermitian_eigs, schur_decompose,
                     singular_values, small_svd)
from .singular import (CriticalDelta, SingularPointRecord, classify_singular_points,
                       critical_deltas, is_interior)
from .svg import emit_svg
from .tracer import (BoundaryCurve, component_count, default_region, grid_seed, sector_probe,
                     trace_boundary, trace_contour)
from .estimator import PseudospectrumAnalyzer
