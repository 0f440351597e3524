"""Verification and error analysis for three-component exponential operator splittings.

Subpackage map:

* ``lie_symbolic``   -- exact rational algebra over words in three noncommuting
  generators; certifies the order conditions and the commutator form of the
  leading error term.
* ``matrix_core``    -- dense complex-matrix kernel (exponential, commutator,
  spectral norm, constraint solver, structured random operators).
* ``splitting``      -- splitting schemes as exponential products, error
  measurement and the closed-form leading error term.
* ``duhamel``        -- nested Gauss-Legendre quadrature of the integral error
  representation and the commutator error bound.
* ``schrodinger``    -- periodic 1D split-step Fourier solver and commutator
  structure checks for the kinetic/potential pair.
* ``harness``        -- convergence studies, certification and verification
  campaigns.
* ``cli``            -- command-line front end.
"""

from trisplit.lie_symbolic import FreeElement, BracketTree, expand_bracket
from trisplit.matrix_core import (
    commutator,
    expm,
    op_norm,
    random_skew_hermitian,
    solve_second_order_constraint,
)
from trisplit.splitting import (
    OperatorSet,
    SplittingScheme,
    apply_splitting,
    check_second_order,
    leading_error_E3,
    make_lie_trotter,
    make_strang,
    splitting_error,
)
from trisplit.duhamel import (
    ErrorReport,
    QuadratureSpec,
    duhamel_error,
    error_bound,
    w_integral,
    z_integral,
)

__all__ = [
    "BracketTree",
    "ErrorReport",
    "FreeElement",
    "OperatorSet",
    "QuadratureSpec",
    "SplittingScheme",
    "apply_splitting",
    "check_second_order",
    "commutator",
    "duhamel_error",
    "error_bound",
    "expand_bracket",
    "expm",
    "leading_error_E3",
    "make_lie_trotter",
    "make_strang",
    "op_norm",
    "random_skew_hermitian",
    "solve_second_order_constraint",
    "splitting_error",
    "w_integral",
    "z_integral",
]

__version__ = "0.1.0"
