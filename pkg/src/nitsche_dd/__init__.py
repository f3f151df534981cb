"""Penalty-free Nitsche methods for two-subdomain Poisson interface problems in 2D."""
from .fitted import FittedProblem, assemble_fitted, solve_fitted, split_square_problem
from .forms import WeightSet, compute_weights_fitted, compute_weights_unfitted
from .geometry import CutDecomposition, GeometryError, LevelSet, MergedTrace, classify_and_cut, merge_traces
from .linalg import SolverError, SparseSystem, compress, solve
from .manufactured import ManufacturedCase, manufactured_fields
from .mesh import Mesh, build_structured
from .norms import ErrorNorms, error_norms
from .quadrature import QuadRule, segment_rule, triangle_rule
from .study import ConvergenceReport, StudyConfig, emit_csv, run_study
from .unfitted import UnfittedProblem, assemble_ghost_penalty, assemble_unfitted, solve_unfitted

__all__ = [
    "ConvergenceReport",
    "CutDecomposition",
    "ErrorNorms",
    "FittedProblem",
    "GeometryError",
    "LevelSet",
    "ManufacturedCase",
    "MergedTrace",
    "Mesh",
    "QuadRule",
    "SolverError",
    "SparseSystem",
    "StudyConfig",
    "UnfittedProblem",
    "WeightSet",
    "assemble_fitted",
    "assemble_ghost_penalty",
    "assemble_unfitted",
    "build_structured",
    "classify_and_cut",
    "compress",
    "compute_weights_fitted",
    "compute_weights_unfitted",
    "emit_csv",
    "error_norms",
    "manufactured_fields",
    "merge_traces",
    "run_study",
    "segment_rule",
    "solve",
    "solve_fitted",
    "solve_unfitted",
    "split_square_problem",
    "triangle_rule",
]
