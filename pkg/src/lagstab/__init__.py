"""Lagrange-multiplier boundary conditions for the Poisson problem.

Stabilised multiplier methods, Nitsche variants and an unfitted interface
solver on structured triangulations of the unit square.
"""

from .analysis import (ErrorRecord, compute_errors, convergence_study, estimate_rates,
                       exact_solution, gamma_sweep, linear_solution, norm_equivalence_bound)
from .exceptions import (DegenerateCut, InvalidArgument, NumericalFailure, SingularSystem,
                         UnsupportedConfiguration)
from .mesh import TraceMesh, TriMesh, build_unit_square_mesh, extract_trace_mesh
from .solver import (MethodSpec, SaddleSystem, SolutionFields, Variant, assemble_system,
                     compute_infsup, infsup_matrices, solve, solve_method)
from .spaces import P0_DISC, P1_CONT, P2_DISC, build_multiplier_space, build_primal_space
from .unfitted import classify_and_cut, interface_convergence, solve_interface

__version__ = "0.1.0"
