"""Cumulant expansion of the disorder-averaged Heisenberg propagator."""

from .superop import (ENUMERATION_LIMITS, LiouvillianTerms, MultiIndex, c4_literal, ell_apply,
                      extract_cumulant, liouvillian_terms, moment_apply, pair_partitions)
from .eigen import (CLOSED_FORMS, EIGEN_CSV_HEADER, CumulantEigenvalue, analytic_available,
                    best_eigenvalue, eigen_residual, lambda_analytic, lambda_analytic_exact,
                    lambda_numeric, propagator_overlap, representative)
from .dynamics import (MAGNITUDE_CSV_HEADER, DynamicalFunction, MagnitudeRow, Reconstruction,
                       default_source, dynamical_function, evaluate_f, magnitude_table,
                       reconstruct_observable, separation_report)

__all__ = [name for name in dir() if not name.startswith("_")]
