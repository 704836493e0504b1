"""Exception hierarchy shared across the package.

Every error raised on a numerical failure carries enough context to be
reported by the CLI as a single machine-parsable line.
"""

from __future__ import annotations


class VortexError(Exception):
    """Base class for all package-specific errors."""


class DomainError(VortexError, ValueError):
    """Invalid parameter value, or a point outside its admissible region."""


class ProximityError(DomainError):
    """Point too close to a guarded set (boundary, prevertex, pole)."""


class PathError(DomainError):
    """Integration path passes through a guarded neighbourhood."""


class SingularityError(VortexError):
    """Evaluation at a genuine singularity (coincident points, pole hit)."""


class ConvergenceError(VortexError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonClosureError(ConvergenceError):
    """A trajectory failed to return to its Poincare section."""


class NonEllipticError(VortexError):
    """Critical point is not elliptic; no local rotation frequency exists."""


class AccuracyError(VortexError):
    """A monitored invariant drifted beyond its tolerance."""


class AccuracyWarning(UserWarning):
    """Resolution looks insufficient; results are returned but degraded."""


class TopologyError(VortexError):
    """A patch boundary self-intersected during evolution."""


class StructureError(VortexError):
    """Forcing content found on Fourier modes that must be resonance-free."""
