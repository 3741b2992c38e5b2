"""Operator calculus of bosonic Laplacians in Clifford analysis.

Exact symbolic operators on polynomial fields f(x, u), exact integration over
the unit ball and sphere, reproducing kernels, an integral Poisson solver and
exact checks of the Green formulas.
"""
from .clifford import Multivector, geometric_product, reversion, embed_vector, reflect, scalar_part
from .mvpoly import CPoly, Slot
from .integrate import ExactScalar

__version__ = "0.1.0"

__all__ = ["Multivector", "geometric_product", "reversion", "embed_vector", "reflect",
           "scalar_part", "CPoly", "Slot", "ExactScalar", "__version__"]
