"""Green function, Robin function, conformal radius, and vortex Hamiltonian.

Everything is expressed through a ConformalMap: with w = phi(z),

    G(z, w')  = log| (phi(z) - phi(w')) / (1 - phi(z) conj(phi(w'))) |
    K(z, w')  = G minus the log singularity (the regular part)
    R(z)      = K(z, z) = log( |phi'(z)| / (1 - |phi(z)|^2) )
    r(z)      = exp(-R(z))        (conformal radius)
    H(z)      = (gamma / 4 pi) R(z)

All evaluators accept scalars or arrays and are pure; PotentialField is
immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import ConformalMap
from .errors import ConvergenceError, DomainError, SingularityError

# separation below which the divided difference of phi switches to its
# midpoint Taylor form
NEAR_DIAGONAL = 1e-6

__all__ = [
    "NEAR_DIAGONAL",
    "PotentialField",
    "conformal_radius",
    "find_critical_point",
    "grakhov_residual",
    "green",
    "green_regular",
    "hamiltonian",
    "koebe_distance_bounds",
    "liouville_residual",
    "robin",
    "robin_grad",
]


@dataclass(frozen=True)
class PotentialField:
    """A conformal map together with the circulation of the single vortex.

    Parameters
    ----------
    map : ConformalMap
        Domain geometry.
    gamma : float
        Circulation; must be positive.  The default makes the square of the
        angular scale in the Hamiltonian equal to 1/4.
    """

    map: ConformalMap
    gamma: float = math.pi

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("circulation must be positive")

    # thin conveniences; the free functions are the primary surface
    def green(self, z, w):
        return green(self, z, w)

    def green_regular(self, z, w):
        return green_regular(self, z, w)

    def robin(self, z):
        return robin(self, z)

    def robin_grad(self, z):
        return robin_grad(self, z)

    def conformal_radius(self, z):
        return conformal_radius(self, z)

    def hamiltonian(self, z):
        return hamiltonian(self, z)


def _pair_arrays(z, w):
    zp = np.atleast_1d(np.asarray(z, dtype=complex))
    wp = np.atleast_1d(np.asarray(w, dtype=complex))
    scalar = np.asarray(z).ndim == 0 and np.asarray(w).ndim == 0
    zp, wp = np.broadcast_arrays(zp, wp)
    return zp.copy(), wp.copy(), scalar


def _scal(values, scalar):
    return float(values[0]) if scalar and values.size == 1 else values


def green(field: PotentialField, z, w):
    """Green function of the domain with pole at w, evaluated at z.

    Negative in the interior and symmetric in its arguments.  Raises a
    singularity error on coincident points.
    """
    zp, wp, scalar = _pair_arrays(z, w)
    if np.any(zp == wp):
        raise SingularityError("Green function evaluated on the diagonal")
    pz = np.atleast_1d(field.map.phi(zp))
    pw = np.atleast_1d(field.map.phi(wp))
    num = pz - pw
    if np.any(num == 0):
        raise SingularityError("mapped points coincide to machine precision")
    val = np.log(np.abs(num / (1.0 - pz * np.conj(pw))))
    return _scal(val, scalar)


def _phi_divided_diff(cmap: ConformalMap, zp, wp, force=None):
    """(phi(z) - phi(w)) / (z - w), stable through the diagonal.

    Below ``NEAR_DIAGONAL`` times the domain diameter the quotient is replaced
    by the midpoint expansion phi'(mid) + phi'''(mid)/24 * (z-w)^2, which is
    exact through fourth order.  ``force`` pins the branch for cross-checks.
    """
    dz = zp - wp
    if force is None:
        near = np.abs(dz) < NEAR_DIAGONAL * cmap.diameter()
    elif force == "taylor":
        near = np.ones(dz.shape, dtype=bool)
    else:
        near = np.zeros(dz.shape, dtype=bool)
    out = np.empty(dz.shape, dtype=complex)
    if np.any(~near):
        pz = np.atleast_1d(cmap.phi(zp[~near]))
        pw = np.atleast_1d(cmap.phi(wp[~near]))
        out[~near] = (pz - pw) / dz[~near]
    if np.any(near):
        mid = 0.5 * (zp[near] + wp[near])
        d1, _, d3 = (np.atleast_1d(t) for t in cmap.phi_derivs(mid))
        out[near] = d1 + (d3 / 24.0) * dz[near] ** 2
    return out


def green_regular(field: PotentialField, z, w):
    """Regular part of the Green function; equals robin(z) on the diagonal."""
    zp, wp, scalar = _pair_arrays(z, w)
    dd = _phi_divided_diff(field.map, zp, wp)
    pz = np.atleast_1d(field.map.phi(zp))
    pw = np.atleast_1d(field.map.phi(wp))
    val = np.log(np.abs(dd / (1.0 - pz * np.conj(pw))))
    return _scal(val, scalar)


def robin(field: PotentialField, z):
    """Robin function log(|phi'| / (1 - |phi|^2))."""
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.asarray(z).ndim == 0
    w, d1, _, _ = (np.atleast_1d(t) for t in field.map.phi_with_derivs(pts))
    val = np.log(np.abs(d1) / (1.0 - np.abs(w) ** 2))
    return _scal(val, scalar)


def conformal_radius(field: PotentialField, z):
    """Conformal radius (1 - |phi|^2) / |phi'| = exp(-robin)."""
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.asarray(z).ndim == 0
    w, d1, _, _ = (np.atleast_1d(t) for t in field.map.phi_with_derivs(pts))
    val = (1.0 - np.abs(w) ** 2) / np.abs(d1)
    return _scal(val, scalar)


def robin_grad(field: PotentialField, z):
    """Wirtinger z-derivative of the Robin function.

    Returns phi''/(2 phi') + phi' conj(phi) / (1 - |phi|^2); the full gradient
    is (2 Re, -2 Im) of this value.
    """
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.asarray(z).ndim == 0
    w, d1, d2, _ = (np.atleast_1d(t) for t in field.map.phi_with_derivs(pts))
    val = d2 / (2.0 * d1) + d1 * np.conj(w) / (1.0 - np.abs(w) ** 2)
    return complex(val[0]) if scalar and val.size == 1 else val


def hamiltonian(field: PotentialField, z):
    """Single-vortex Hamiltonian (gamma / 4 pi) * robin(z)."""
    return field.gamma / (4.0 * math.pi) * robin(field, z)


def koebe_distance_bounds(field: PotentialField, z):
    """Distortion bracket [r/4, r] that contains the boundary distance."""
    r = conformal_radius(field, z)
    return 0.25 * r, r


def liouville_residual(field: PotentialField, z, h: float):
    """|five-point Laplacian of R minus 4 exp(2R)| at a single point.

    Second-order small in the stencil step h; raises a proximity error when
    the stencil leaves the domain.
    """
    z = complex(z)
    h = float(h)
    stencil = np.array([z, z + h, z - h, z + 1j * h, z - 1j * h])
    r = robin(field, stencil)
    lap = (np.sum(r[1:]) - 4.0 * r[0]) / h ** 2
    return abs(lap - 4.0 * math.exp(2.0 * r[0]))


def grakhov_residual(field: PotentialField, z):
    """Defect of the disc-side critical point equation F''/F' = 2 w~/(1-|w|^2)."""
    w = field.map.phi(complex(z))
    g1, g2, _ = field.map.inverse_derivs(w)
    return abs(g2 / g1 - 2.0 * np.conj(w) / (1.0 - abs(w) ** 2))


def _grad_vec(field: PotentialField, z: complex):
    g = robin_grad(field, z)
    return np.array([2.0 * g.real, -2.0 * g.imag])


def find_critical_point(field: PotentialField, seed) -> complex:
    """Damped Newton search for a zero of the Robin gradient.

    The Jacobian of the planar gradient is assembled by central finite
    differences; steps are halved until the gradient norm decreases and the
    iterate stays interior.  Success means |d_z R| < 1e-10.
    """
    cmap = field.map
    z = complex(seed)
    diam = cmap.diameter()
    hj = 1e-6 * diam
    gz = robin_grad(field, z)
    for _ in range(100):
        if abs(gz) < 1e-10:
            return z
        gxp = _grad_vec(field, z + hj)
        gxm = _grad_vec(field, z - hj)
        gyp = _grad_vec(field, z + 1j * hj)
        gym = _grad_vec(field, z - 1j * hj)
        J = np.column_stack([(gxp - gxm) / (2 * hj), (gyp - gym) / (2 * hj)])
        try:
            sol = np.linalg.solve(J, -np.array([2.0 * gz.real, -2.0 * gz.imag]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                "singular Jacobian in critical-point search", residual=abs(gz)
            ) from exc
        delta = complex(sol[0], sol[1])
        accepted = False
        for _ in range(50):
            zn = z + delta
            if cmap.boundary_distance(zn) > 1e-9 * diam:
                gn = robin_grad(field, zn)
                if abs(gn) < abs(gz):
                    z, gz = zn, gn
                    accepted = True
                    break
            delta *= 0.5
        if not accepted:
            break
    if abs(gz) < 1e-10:
        return z
    raise ConvergenceError(
        "critical-point search did not reach tolerance",
        residual=float(abs(gz)),
        iterations=100,
    )
