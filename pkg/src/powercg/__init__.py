"""Power-weighted conjugate-gradient iterations and their spectral diagnostics.

The degree-N iterate minimizes the A^{theta/2}-weighted distance to the
solution set of A f = g over the affine Krylov space of the initial residual;
theta = 1 is plain CG, theta = 2 minimizes the residual, fractional and
larger powers interpolate and extrapolate. The companion machinery follows
the error through a discrete spectral measure: orthogonal node polynomials,
their zeros, the delta functional of the zeros, and a verified chain of tail
bounds.
"""

from .linop import (DiagonalOperator, DimensionMismatchError, FourierOperator,
                    KernelComponentError, MatrixOperator, SelfAdjointOperator,
                    SpectralAccessError, apply, estimate_norm, fractional_apply)
from .measures import (DiscreteSpectralMeasure, mass_below, moment,
                       spectral_measure, weight_by_power)
from .krylov import (ConsistencyError, InverseProblem, IterateHistory,
                     JacobiMatrix, brute_force_iterate, brute_force_objective,
                     lanczos, run_cg, theta_iterate, theta_iterate_spectral)
from .orthopoly import (ChainReport, ChainStep, ResidualPolynomial,
                        bound_chain, check_separation, delta_n, lemma_bound,
                        orthogonality_gap, residual_polynomials,
                        rho_integral_identity)
from .diagnostics import (ConvergenceRecord, class_membership_indicator,
                          np_rate_monitor, rho, u_sigma)
from .runs import (RunConfig, RunRecord, VersionError, build_custom_case,
                   build_test_case, emit_json, read_csv, read_json, run,
                   verify_case, write_csv)

__version__ = "0.1.0"

__all__ = [
    "SelfAdjointOperator", "MatrixOperator", "DiagonalOperator",
    "FourierOperator", "apply", "fractional_apply", "estimate_norm",
    "DimensionMismatchError", "KernelComponentError", "SpectralAccessError",
    "DiscreteSpectralMeasure", "spectral_measure", "weight_by_power",
    "moment", "mass_below",
    "InverseProblem", "IterateHistory", "JacobiMatrix", "ConsistencyError",
    "run_cg", "theta_iterate", "theta_iterate_spectral", "lanczos",
    "brute_force_iterate", "brute_force_objective",
    "ResidualPolynomial", "residual_polynomials", "delta_n",
    "check_separation", "orthogonality_gap", "lemma_bound", "bound_chain",
    "rho_integral_identity", "ChainReport", "ChainStep",
    "ConvergenceRecord", "rho", "u_sigma", "class_membership_indicator",
    "np_rate_monitor",
    "RunConfig", "RunRecord", "VersionError", "build_test_case",
    "build_custom_case", "run", "verify_case", "emit_json", "read_json",
    "write_csv", "read_csv",
]
