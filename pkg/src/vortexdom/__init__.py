"""Point-vortex dynamics and vortex patches in bounded simply connected domains.

Subpackage layout:

- ``specialfn``: elliptic integrals, Jacobi functions, Gauss-Legendre rules
- ``conformal``: conformal maps from bounded domains onto the unit disc
- ``greenrobin``: Green function, Robin function, and the vortex Hamiltonian
- ``pointvortex``: single-vortex trajectories, periods, critical points
- ``monodromy``: linearized return map along a periodic orbit
- ``admissibility``: spectral nondegeneracy criteria for domains
- ``contour``: vortex-patch contour functionals and time evolution
- ``duplication``: domain duplication by reflection and image systems
- ``cli``: the ``vortexdom`` command-line interface
"""

__version__ = "0.1.0"

from . import (
    admissibility,
    conformal,
    errors,
    greenrobin,
    monodromy,
    pointvortex,
    specialfn,
)

__all__ = [
    "admissibility",
    "conformal",
    "errors",
    "greenrobin",
    "monodromy",
    "pointvortex",
    "specialfn",
    "__version__",
]
