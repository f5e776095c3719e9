"""Equivariant deformation toolkit.

Families of matrix groups over a curvature-like parameter, discretized
invariant variational problems on the geometries they act on, kernel
certification against the Killing-Jacobi span, and branch continuation
in the family parameter.
"""

from .errors import (ConfigError, DomainError, EquideformError,
                     IllConditioned, NoConvergence, PreconditionError,
                     ShapeError, UnsupportedError)
from .lie_bundle import (AlgebraBasis, AlgebraElement, CheckReport,
                         GroupWord, QuadraticForm, ReductivePair,
                         SliceElement, algebra_basis, algebra_element,
                         bracket_closure_residual, complement_and_slice_check,
                         complement_basis, deformed_bracket, eta_form,
                         exponential, group_membership_residual,
                         invariance_residual, section, slice_element)
from .mesh import Grid, Pairing, build_grid, diff_apply, fornberg_weights, pairing_weights
from .ambient import (FlatTorus, ProductM2kR, ScaledSphere, SpaceForm2,
                      killing_fields, killing_fields_at, killing_residual,
                      metric_at, quadric_embed, quadric_to_chart, radial_area,
                      sn_lambda, structure_match)
from .variational import (CmcCircle, CmcProfile, HarmonicSphere,
                          HarmonicTorus, JacobiOperator, ProblemState, act,
                          circle_seed, cmc_circle_radius, derived_scalars,
                          geodesic_curvature, jacobi, killing_jacobi_basis,
                          orbit_generators, pairing, profile_cylinder_seed,
                          residual, residual_norm, sphere_equator_seed,
                          state_size, torus_line_seed, value)
from .equivariance import (DiagnosticsReport, KernelBasis, NondegeneracyReport,
                           SliceBasis, nondegeneracy_report, numerical_kernel,
                           operator_diagnostics, rank_basis, slice_basis,
                           transversality_margin)
from .continuation import (BranchRecord, ContinuationConfig, GroupParameters,
                           congruence_check, continue_branch, corrector_step,
                           orbit_project)

__version__ = "0.1.0"
