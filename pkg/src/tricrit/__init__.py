"""Effective-potential analysis of a weakly self-avoiding walk on the complete graph.

The walk's interaction ``p(s) = exp(-u s^3 - g s^2 - nu s)`` is reduced to a
one-variable potential ``V(t)``; its minima fix the phase, the phase boundary
and the tricritical point, and Laplace-type integrals of ``exp(-N V)`` give the
finite-N and large-N behaviour of the two-point function, susceptibility and
expected length. A Monte Carlo simulation of the walk itself serves as an
independent check.
"""

from .model import InadmissibleParameters, Interaction, ModelParams, make_polynomial_interaction
from .specfun import bessel_i_scaled, bessel_ihat_scaled
from .quadrature import QuadratureError, QuadResult, integrate_decaying
from .potential import (Moments, Potential, PotentialEval, moments, potential_eval,
                        v_and_derivs, vdot_and_derivs)
from .phase import AmbiguousClassification, Phase, PhaseReport, classify, interior_minima
from .curves import (BoundaryPoint, CurveKind, TricriticalPoint, boundary_derivatives,
                     first_order_point, second_order_nu, trace_boundary, tricritical_point,
                     tricritical_solve)
from .asymptotics import (AsymptoticLaw, approach_scaling, laplace_endpoint, laplace_interior,
                          observable_laws, tricritical_constants)
from .finite_n import FiniteNObservables, finite_n_observables, reduce_integral
from .mc_walk import (McEstimate, NonDecayingWeight, estimate_chi, estimate_two_point,
                      sample_weight_curve)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousClassification", "AsymptoticLaw", "BoundaryPoint", "CurveKind",
    "FiniteNObservables", "InadmissibleParameters", "Interaction", "McEstimate", "ModelParams",
    "Moments", "NonDecayingWeight", "Phase", "PhaseReport", "Potential", "PotentialEval",
    "QuadResult", "QuadratureError", "TricriticalPoint", "approach_scaling",
    "bessel_i_scaled", "bessel_ihat_scaled", "boundary_derivatives", "classify",
    "estimate_chi", "estimate_two_point", "finite_n_observables", "first_order_point",
    "integrate_decaying", "interior_minima", "laplace_endpoint", "laplace_interior",
    "make_polynomial_interaction", "moments", "observable_laws", "potential_eval",
    "reduce_integral", "sample_weight_curve", "second_order_nu", "trace_boundary",
    "tricritical_constants", "tricritical_point", "tricritical_solve", "v_and_derivs",
    "vdot_and_derivs",
]
