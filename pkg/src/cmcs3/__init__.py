"""Constant-mean-curvature cylinders in the 3-sphere by loop-group methods.

Submodules:
  loop_algebra  Laurent matrix polynomials, reality/semisimplicity, dressing
  iwasawa       loop factorization, frames, polynomial conserved fields
  immersion     surfaces in S^3, curvature diagnostics, meshes
  spectral      spectral data, closing conditions, branch diagnostics
  flow          deformations of spectral data with invariant monitoring
  families      closed-form examples (sphere, flat, Clifford, Delaunay, ...)
"""

from . import families, flow, immersion, iwasawa, loop_algebra, spectral
from .errors import (
    CMCError,
    ConditioningError,
    ConvergenceError,
    DomainError,
    InconsistencyError,
    PreconditionError,
)

__version__ = "0.1.0"

__all__ = [
    "families",
    "flow",
    "immersion",
    "iwasawa",
    "loop_algebra",
    "spectral",
    "CMCError",
    "ConditioningError",
    "ConvergenceError",
    "DomainError",
    "InconsistencyError",
    "PreconditionError",
]
