"""Support functions of smooth convex bodies, the volume functional and its
variations, and numerical certification of the Poincare-type inequality that
follows from the Brunn-Minkowski inequality."""

from .body import (BodySpecError, InvalidBodyError, SupportFunction, WeingartenData, gauss_preimage,
                   min_principal_curvature, parse_body_spec, reverse_weingarten, support_value,
                   validate_C2plus, volume)
from .harmonics import HarmonicBasis, build_basis, harmonic_function
from .poincare import (IndefiniteFormError, PoincareForms, VerificationReport, assemble_forms, equality_case_check,
                       lichnerowicz_check, min_constrained_rayleigh, verify_T1, verify_T2)
from .sphere import (LinearField, SphereField, SphereQuadrature, build_quadrature, covariant_gradient,
                     covariant_hessian)
from .variation import (VariationResult, bm_concavity_scan, first_variation, second_variation,
                        variation_profile, weak_divergence_check)

__version__ = "0.1.0"
