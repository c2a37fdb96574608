"""High-precision second moments of Dirichlet L-functions.

The package computes exact moments of L(1/2, chi) over primitive character
families modulo an odd prime, checks every identity in the chain that
converts those moments into contour integrals and residues, and measures
the resulting asymptotic expansions, including empirical extraction of
their undetermined constants.
"""

from .hp import PrecisionContext, DEFAULT_CONTEXT, compensated_sum

__all__ = ["PrecisionContext", "DEFAULT_CONTEXT", "compensated_sum"]
__version__ = "0.1.0"
