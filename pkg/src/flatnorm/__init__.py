"""Bounded-Lipschitz (flat) norms of finitely supported charges, hypermeasures
in the norm completion, and precompactness diagnostics for families."""

from .blnorm import (Neighborhood, NormResult, SolverError, distance, flat_norm, norm_dual_flow,
                     norm_oracle, norm_primal, quasicontinuity_modulus)
from .charges import (ZERO, BLFunction, Charge, MixedSpaceError, integrate, linear_combine,
                      restrict_outside, total_mass, total_variation)
from .family import (Family, FamilyReport, NeighborhoodBasis, default_basis, equi_modulus_profile,
                     net_modulus, net_neighborhood, make_family, norm_profile,
                     precompactness_verdict, sup_modulus, tightness_profile)
from .hyper import (EvalResult, Hypermeasure, IndexCapError, Interval, canonical_example, evaluate,
                    from_charge, hyper_distance, hyper_lincomb, hyper_norm)
from .metric import (DyadicGrid, MetricError, MetricSpace, Point, build_euclidean, build_from_matrix,
                     separating_function, validate_matrix)

__version__ = "0.1.0"
