"""Free holomorphic functions on matrix-polynomial domains.

Free polynomials, realizations by isometric colligations, homogeneous
expansions and randomized checks of the free-function axioms.
"""
from .domain import (commutator_delta, delta_norm, is_member, polydisk, row_ball, sample_point,
                     sample_similarity)
from .errors import (DomainError, FixtureError, FreeholoError, NumericalError, ParseError)
from .expand import (approximate_on_finite_set, cauchy_certificate, dft_components, symbolic_expand)
from .freepoly import FreePoly, PolyMatrix, evaluate
from .matcore import MatrixTuple, opnorm
from .ncharness import (Evaluator, PropertyReport, check_algebra_membership, check_direct_sums,
                        check_intertwining, check_projection_lemma, check_series_equivalence,
                        check_ssoc)
from .polyparse import parse_delta, parse_poly, print_poly
from .realization import (Colligation, RealizedFunction, block_derivative, compose_mobius,
                          defect_check, eval_exact, eval_neumann, mobius_apply, mobius_series,
                          random_colligation)

__version__ = "0.1.0"

__all__ = [
    "Colligation", "DomainError", "Evaluator", "FixtureError", "FreePoly", "FreeholoError",
    "MatrixTuple", "NumericalError", "ParseError", "PolyMatrix", "PropertyReport",
    "RealizedFunction", "approximate_on_finite_set", "block_derivative", "cauchy_certificate",
    "check_algebra_membership", "check_direct_sums", "check_intertwining", "check_projection_lemma",
    "check_series_equivalence", "check_ssoc", "commutator_delta", "compose_mobius", "defect_check",
    "delta_norm", "dft_components", "eval_exact", "eval_neumann", "evaluate", "is_member",
    "mobius_apply", "mobius_series", "opnorm", "parse_delta", "parse_poly", "polydisk",
    "print_poly", "random_colligation", "row_ball", "sample_point", "sample_similarity",
    "symbolic_expand",
]
