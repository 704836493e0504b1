"""Vortex patches around periodic point-vortex orbits.

A patch of circulation ``gamma`` and radius scale ``eps`` rides a periodic
center path ``p(phi)``.  Its boundary, in local frame coordinates, is the
curve ``z = R e^{i theta}`` with ``R = (1 + 2 eps r)^{1/2}`` and ``r`` a
scalar field on the ``(phi, theta)`` torus.  The residual functional
assembled here measures the failure of that ansatz to move with the flow;
its approximate zeros, the rigidly rotating branch in the unit disc, and
direct contour-dynamics time stepping all live in this module.

Conventions: ``phi`` is the orbit phase (``phi = omega t``), ``theta`` the
boundary label, and angular integrals carry the normalized measure
``d theta / (2 pi)``.  All angular derivatives are spectral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray

from ._fourier import (
    dealiased_product,
    deriv,
    grid,
    invert_dtheta_minus_hilbert,
    log2sin_convolution,
    mode_coefficients,
    sine_coefficients,
    trig_resample,
)
from .errors import (
    AccuracyWarning,
    ConvergenceError,
    DomainError,
    StructureError,
    TopologyError,
)
from .greenrobin import PotentialField, robin_grad
from .pointvortex import PeriodicOrbit

__all__ = [
    "DEFAULT_N_PHI",
    "DEFAULT_N_THETA",
    "EPS_MAX",
    "PatchFrame",
    "PatchState",
    "Residual",
    "approx_solution",
    "eval_residual",
    "evolve_patch",
    "leading_forcing",
    "rescaled_residual",
    "rigid_patch_state",
    "rigid_solve",
    "w2",
]

DEFAULT_N_PHI = 64
DEFAULT_N_THETA = 128
EPS_MAX = 0.2

# Tensor quadrature for the smooth-kernel area integrals.
GL_RADIAL = 32
GL_ANGULAR = 64

MEAN_FREE_TOL = 1e-10
MODE_LEAK_TOL = 1e-9
TAIL_TOL = 1e-8

RIGID_EPS_MAX = 0.05
RIGID_Q_MAX = 0.9
RIGID_TOL = 1e-10
RIGID_MAX_ITER = 60


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def _gauss01(n: int):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _cderiv(z: NDArray, axis: int = -1) -> NDArray:
    """Spectral derivative of a complex periodic field."""
    return deriv(z.real, axis=axis) + 1j * deriv(z.imag, axis=axis)


def _clog2sin(z: NDArray, axis: int = -1) -> NDArray:
    """log|2 sin| convolution of a complex density."""
    return log2sin_convolution(z.real, axis=axis) + 1j * log2sin_convolution(
        z.imag, axis=axis
    )


def _center_samples(orbit: PeriodicOrbit, m: int) -> NDArray[np.complex128]:
    """Center positions at m uniform phases, resampled from the orbit."""
    s = np.asarray(orbit.samples, dtype=complex)
    n0 = s.shape[0]
    if n0 % m == 0:
        return s[:: n0 // m].copy()
    if m >= n0:
        return trig_resample(s, m)
    k = -(-n0 // m) * m
    return trig_resample(s, k)[:: k // m]


def _trig_eval(f: NDArray, angles: NDArray, axis: int = -1) -> NDArray:
    """Evaluate the trigonometric interpolant of real samples at angles."""
    f = np.moveaxis(np.asarray(f, dtype=float), axis, -1)
    n = f.shape[-1]
    c = np.fft.fft(f, axis=-1) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    # Nyquist mode split symmetrically so real input gives real output.
    basis = np.exp(1j * np.outer(k, np.asarray(angles)))
    if n % 2 == 0:
        basis[n // 2] = np.cos(k[n // 2] * np.asarray(angles))
    out = np.real(c @ basis)
    return np.moveaxis(out, -1, axis)


# ----------------------------------------------------------------------
# state containers


@dataclass(frozen=True)
class PatchState:
    """Shape field of a vortex patch riding a periodic center path.

    Parameters
    ----------
    eps : float
        Patch radius scale; the physical boundary is ``p + eps R e^{i theta}``.
    level : float
        Energy level of the center orbit (matches ``orbit.level``).
    r : ndarray of shape (n_phi, n_theta)
        Samples of the shape field on the uniform torus grid; the boundary
        radius is ``R = (1 + 2 eps r)^{1/2}``.
    orbit : PeriodicOrbit
        Center path; ``orbit.samples`` are the positions at uniform phase.
    gamma : float, optional
        Patch circulation, pi by default.

    Notes
    -----
    Two invariants are enforced at construction: each phi-slice of ``r``
    has zero theta-average (so the local patch area is exactly
    ``pi`` in rescaled units), and ``1 + 2 eps r > 0`` so the radius is
    well defined.
    """

    eps: float
    level: float
    r: NDArray[np.float64]
    orbit: PeriodicOrbit
    gamma: float = math.pi

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 2:
            raise DomainError("shape field must be a 2-d (phi, theta) grid")
        if not (0.0 < self.eps):
            raise DomainError("eps must be positive")
        if not (0.0 < self.gamma):
            raise DomainError("gamma must be positive")
        mean = np.abs(r.mean(axis=1)).max()
        if mean > MEAN_FREE_TOL:
            raise DomainError(
                "shape field must have zero theta-average per slice "
                "(max |mean| = %.3e)" % mean
            )
        if (1.0 + 2.0 * self.eps * r).min() <= 0.0:
            raise DomainError("1 + 2 eps r must stay positive")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n_phi(self) -> int:
        return self.r.shape[0]

    @property
    def n_theta(self) -> int:
        return self.r.shape[1]

    def radius(self) -> NDArray[np.float64]:
        """Boundary radius R on the torus grid."""
        return np.sqrt(1.0 + 2.0 * self.eps * self.r)

    def boundary_nodes(self, n: int | None = None, slice_index: int = 0
                       ) -> NDArray[np.complex128]:
        """Physical boundary nodes of one phi-slice.

        Parameters
        ----------
        n : int, optional
            Number of nodes; defaults to ``n_theta``.  Values above the
            stored resolution are filled by trigonometric interpolation.
        slice_index : int, optional
            Which phi-slice to realize, the first by default.
        """
        rs = self.r[slice_index]
        if n is not None and n != rs.shape[0]:
            if n > rs.shape[0]:
                rs = trig_resample(rs, n)
            else:
                th = grid(n)
                rs = _trig_eval(rs, th)
        p0 = _center_samples(self.orbit, self.n_phi)[slice_index]
        th = grid(rs.shape[0])
        radius = np.sqrt(1.0 + 2.0 * self.eps * rs)
        return p0 + self.eps * radius * np.exp(1j * th)

    @classmethod
    def circular(cls, orbit: PeriodicOrbit, eps: float,
                 n_phi: int = DEFAULT_N_PHI, n_theta: int = DEFAULT_N_THETA,
                 gamma: float = math.pi) -> "PatchState":
        """Unperturbed state r = 0 (circular cross-section everywhere)."""
        return cls(eps=eps, level=orbit.level,
                   r=np.zeros((n_phi, n_theta)), orbit=orbit, gamma=gamma)


@dataclass(frozen=True)
class Residual:
    """Residual field of the patch functional on the torus grid."""

    values: NDArray[np.float64]
    max_norm: float
    l2_norm: float

    @classmethod
    def from_values(cls, values: NDArray[np.float64]) -> "Residual":
        v = np.asarray(values, dtype=float)
        return cls(values=v, max_norm=float(np.abs(v).max()),
                   l2_norm=float(np.sqrt(np.mean(v * v))))


@dataclass(frozen=True)
class PatchFrame:
    """One snapshot of a contour-dynamics evolution."""

    t: float
    nodes: NDArray[np.complex128]
    area: float
    centroid: complex
    energy: float | None = None


# ----------------------------------------------------------------------
# leading-order coefficients


def w2(field: PotentialField, z):
    """Quadratic shape-response coefficient of the domain at z.

    Returns ``(d_z Robin)^2 + S(phi)/3`` where ``S(phi)`` is the Schwarzian
    of the disc map.  The imaginary exponential ``w2 e^{2 i theta}`` drives
    the leading elliptical deformation of a small patch centered at z.

    Parameters
    ----------
    field : PotentialField
        Domain and circulation.
    z : complex or ndarray
        Interior evaluation points.

    Returns
    -------
    complex or ndarray
    """
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    if not np.all(field.map.contains(pts)):
        raise DomainError("w2 requires interior points")
    g = robin_grad(field, pts)
    s = field.map.schwarzian_of_phi(pts)
    out = g * g + s / 3.0
    return complex(out[0]) if np.isscalar(z) or np.asarray(z).ndim == 0 else out


def leading_forcing(field: PotentialField, orbit: PeriodicOrbit, eps: float,
                    n_phi: int = DEFAULT_N_PHI, n_theta: int = DEFAULT_N_THETA):
    """Leading shape deformation g and residual forcing along an orbit.

    Parameters
    ----------
    field : PotentialField
    orbit : PeriodicOrbit
        Center path; w2 is evaluated at its phase samples.
    eps : float
        Patch radius scale.
    n_phi, n_theta : int, optional
        Torus grid resolution.

    Returns
    -------
    g : ndarray of shape (n_phi, n_theta)
        ``Re{w2(p(phi)) e^{2 i theta}}``; the first-order shape response
        is ``-g``.
    forcing : ndarray of shape (n_phi, n_theta)
        Leading residual of the circular state,
        ``-(gamma/pi) (eps^2/2) Im{w2(p(phi)) e^{2 i theta}}``.
    """
    p = _center_samples(orbit, n_phi)
    coeff = w2(field, p)
    wave = coeff[:, None] * np.exp(2j * grid(n_theta))[None, :]
    g = wave.real
    forcing = -(field.gamma / math.pi) * (0.5 * eps ** 2) * wave.imag
    return g, forcing


# ----------------------------------------------------------------------
# residual functional


def _theta_psi1(z: NDArray[np.complex128]) -> NDArray[np.float64]:
    """Tangential derivative of the self-induction potential.

    For boundary samples ``z(..., theta)`` of a star-shaped curve this
    returns ``d/d theta`` of ``(2 pi)^{-1} \\iint_O log|z(theta) - w| dA(w)``
    where O is the region enclosed by the curve.  The area integral is
    collapsed to a boundary convolution: the kernel factorizes through
    ``Im{z'(theta) conj(z'(eta))}``, the log splits into its periodic
    singular part and a smooth remainder, and both pieces are integrated
    spectrally on the grid.
    """
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    th = grid(n)
    zp = _cderiv(z)
    conv = _clog2sin(zp)
    dz = z[..., :, None] - z[..., None, :]
    den = 2.0 * np.abs(np.sin(0.5 * (th[:, None] - th[None, :])))
    idx = np.arange(n)
    den[idx, idx] = 1.0
    ratio = np.abs(dz) / den
    # Diagonal limit of the smooth log remainder is log|z'|.
    ratio[..., idx, idx] = np.abs(zp)
    smooth = np.mean(np.log(ratio) * zp[..., None, :], axis=-1)
    return np.imag(zp * np.conj(conv + smooth))


def _psi2_grid(field: PotentialField, p: NDArray[np.complex128], eps: float,
               r: NDArray[np.float64]) -> NDArray[np.float64]:
    """Smooth-kernel interaction potential on the torus grid.

    Evaluates ``psi2(phi, theta) = (2 pi)^{-1} \\iint_O K(x, p + eps w) dA(w)``
    with x the physical boundary point and K the regular part of the Green
    function, by a Gauss-Legendre tensor rule in polar coordinates whose
    radial extent follows the patch boundary.
    """
    m, n = r.shape
    th = grid(n)
    radius = np.sqrt(1.0 + 2.0 * eps * r)
    x = p[:, None] + eps * radius * np.exp(1j * th)[None, :]

    tl, wl = _gauss01(GL_RADIAL)
    xe, we = leggauss(GL_ANGULAR)
    eta = math.pi * (xe + 1.0)
    weta = 0.5 * we  # normalized angular measure

    r_eta = _trig_eval(r, eta, axis=1)
    rad_eta = np.sqrt(1.0 + 2.0 * eps * r_eta)  # (m, Q)

    # Radial nodes l = R(eta) t scale the unit rule slice by slice.
    ell = rad_eta[:, :, None] * tl[None, None, :]  # (m, Q, S)
    wgt = (weta[None, :, None] * rad_eta[:, :, None] ** 2
           * (wl * tl)[None, None, :])
    y = p[:, None, None] + eps * ell * np.exp(1j * eta)[None, :, None]

    phi_x = np.asarray(field.map.phi(x.ravel()), dtype=complex).reshape(m, n)
    phi_y = np.asarray(field.map.phi(y.reshape(-1)), dtype=complex).reshape(y.shape)

    psi2 = np.empty((m, n))
    for i in range(m):
        dx = x[i, :, None, None] - y[i][None, :, :]
        dphi = phi_x[i, :, None, None] - phi_y[i][None, :, :]
        kern = (np.log(np.abs(dphi / dx))
                - np.log(np.abs(1.0 - phi_x[i, :, None, None]
                                * np.conj(phi_y[i][None, :, :]))))
        psi2[i] = np.einsum("jqs,qs->j", kern, wgt[i])
    return psi2


def eval_residual(field: PotentialField, orbit: PeriodicOrbit,
                  state: PatchState) -> Residual:
    """Evaluate the patch residual functional on the torus grid.

    The residual combines the phase transport of the shape field, the
    local self-induction of the deformed boundary, and the interaction
    with the domain through the regular part of the Green function:

    ``eps^3 omega d_phi r + (gamma/pi) d_theta [ -(eps/2) Re{dR(p) R e^{i
    theta}} + psi1 + psi2 ]``

    where dR is the Robin-function gradient.  A state that solves the
    patch dynamics at its order makes this field small uniformly on the
    torus.

    Parameters
    ----------
    field : PotentialField
    orbit : PeriodicOrbit
        Center path supplying the phase speed omega and the samples p(phi).
    state : PatchState
        Shape field; its grid must have power-of-two dimensions and its
        eps must satisfy ``eps < EPS_MAX``.

    Returns
    -------
    Residual
        Grid values with max and L2 norms.

    Raises
    ------
    DomainError
        If eps is out of range or the grid is not power-of-two sized.

    Warns
    -----
    AccuracyWarning
        If the spectral tail of the residual exceeds ``TAIL_TOL`` of its
        max norm, indicating an under-resolved shape field.
    """
    m, n = state.r.shape
    if not (_is_pow2(m) and _is_pow2(n)):
        raise DomainError("grid dimensions must be powers of two")
    if not (0.0 < state.eps < EPS_MAX):
        raise DomainError("eps must lie in (0, %.1f)" % EPS_MAX)

    eps = state.eps
    r = state.r
    th = grid(n)
    p = _center_samples(orbit, m)
    radius = np.sqrt(1.0 + 2.0 * eps * r)
    z = radius * np.exp(1j * th)[None, :]

    transport = eps ** 3 * orbit.omega * deriv(r, axis=0)
    drp = robin_grad(field, p)
    explicit = -(0.5 * eps) * deriv((drp[:, None] * z).real, axis=1)
    psi1 = _theta_psi1(z)
    psi2 = _psi2_grid(field, p, eps, r)
    dpsi2 = deriv(psi2, axis=1)

    values = transport + (field.gamma / math.pi) * (explicit + psi1 + dpsi2)
    res = Residual.from_values(values)
    tail = _spectral_tail(values)
    # Roundoff floor: the summed pieces cancel to many digits, quadrature
    # assembly accumulates noise, and the spectral derivative amplifies
    # potential-level noise by up to n/2.
    gross = 1.0 + np.abs(psi2).max() + eps * np.abs(drp).max()
    floor = 4.0 * max(m, n) ** 1.5 * np.finfo(float).eps * gross
    if tail > max(TAIL_TOL * res.max_norm, floor):
        warnings.warn(
            "spectral tail %.2e exceeds %.0e of the residual norm; "
            "increase the grid resolution" % (tail, TAIL_TOL),
            AccuracyWarning, stacklevel=2)
    return res


def _spectral_tail(values: NDArray[np.float64]) -> float:
    """Largest coefficient magnitude in the top half of either spectrum."""
    tail = 0.0
    for axis in (0, 1):
        c = np.abs(mode_coefficients(values, axis=axis))
        nn = c.shape[axis]
        lo, hi = nn // 4 + 1, nn - nn // 4
        sl = [slice(None), slice(None)]
        sl[axis] = slice(lo, hi)
        band = c[tuple(sl)]
        if band.size:
            tail = max(tail, float(band.max()))
    return tail


def circular_residual_exact(field: PotentialField, orbit: PeriodicOrbit,
                            eps: float, n_phi: int = DEFAULT_N_PHI,
                            n_theta: int = DEFAULT_N_THETA
                            ) -> NDArray[np.float64]:
    """Closed-form residual of the circular state r = 0.

    For r = 0 the self-induction vanishes by the mean-value property and
    the interaction potential collapses to half the regular Green kernel
    between the displaced boundary point and the center, so the residual
    reduces to a single tangential derivative.  Used as an independent
    check of the quadrature path in ``eval_residual``.
    """
    from .greenrobin import green_regular

    th = grid(n_theta)
    p = _center_samples(orbit, n_phi)
    x = p[:, None] + eps * np.exp(1j * th)[None, :]
    kern = green_regular(field, x, np.broadcast_to(p[:, None], x.shape))
    drp = robin_grad(field, p)
    profile = 0.5 * kern - 0.5 * eps * (drp[:, None] * np.exp(1j * th)[None, :]).real
    return (field.gamma / math.pi) * deriv(profile, axis=1)


# ----------------------------------------------------------------------
# approximate solutions


def _require_clean_modes(values: NDArray[np.float64], tol: float = MODE_LEAK_TOL):
    """Reject forcing content on the resonant theta-modes 0 and +-1."""
    c = mode_coefficients(values, axis=1)
    leak = float(np.max(np.abs(c[:, [0, 1, -1]])))
    if leak > tol:
        raise StructureError(
            "circular-state residual leaks %.3e onto theta-modes 0, +-1 "
            "(tolerance %.0e); the center path does not solve the point "
            "dynamics" % (leak, tol))


def approx_solution(field: PotentialField, orbit: PeriodicOrbit, eps: float,
                    with_correction: bool = False,
                    n_phi: int = DEFAULT_N_PHI, n_theta: int = DEFAULT_N_THETA
                    ) -> PatchState:
    """Approximate steadily deforming patch along a periodic orbit.

    The circular-state residual is inverted through the angular operator
    (diagonal in Fourier, modes 0 and +-1 excluded): the resulting shape
    field, whose leading content is the elliptical response ``-g`` with
    ``g = Re{w2(p) e^{2 i theta}}``, drops the residual by two orders.
    With correction a transport-driven term of the next order is added,
    gaining one more.

    Parameters
    ----------
    field : PotentialField
    orbit : PeriodicOrbit
    eps : float
        Patch radius scale, ``0 < eps < EPS_MAX``.
    with_correction : bool, optional
        Add the next-order corrector.
    n_phi, n_theta : int, optional
        Torus resolution (powers of two).

    Returns
    -------
    PatchState
        State whose ``r`` field already carries the eps scaling expected
        by ``eval_residual``.

    Raises
    ------
    StructureError
        If the circular residual carries content on theta-modes 0, +-1
        beyond ``MODE_LEAK_TOL``; those modes are not invertible and such
        content signals an inconsistent center path.
    """
    zero = PatchState(eps=eps, level=orbit.level,
                      r=np.zeros((n_phi, n_theta)), orbit=orbit,
                      gamma=field.gamma)
    g0 = eval_residual(field, orbit, zero).values
    _require_clean_modes(g0)
    scale = math.pi / field.gamma
    r0 = (-2.0 * scale / eps ** 2) * invert_dtheta_minus_hilbert(g0, axis=1)
    shape = eps * r0
    if with_correction:
        g, _ = leading_forcing(field, orbit, eps, n_phi, n_theta)
        omega_ref = scale * orbit.omega
        b1 = (-omega_ref * deriv(g, axis=0)
              - 0.75 * deriv(dealiased_product(g, g, axis=1), axis=1))
        r1 = -2.0 * eps * invert_dtheta_minus_hilbert(b1, axis=1)
        shape = shape + eps ** 2 * r1
    return PatchState(eps=eps, level=orbit.level, r=shape, orbit=orbit,
                      gamma=field.gamma)


def rescaled_residual(field: PotentialField, orbit: PeriodicOrbit, eps: float,
                      rho: NDArray[np.float64], mu: float = 0.5,
                      with_correction: bool = True) -> Residual:
    """Residual of the approximate solution plus a rescaled perturbation.

    Evaluates ``eps^{-(2+mu)} G(r_eps + eps^{1+mu} rho)`` where ``r_eps``
    is the approximate shape field.  The perturbation rho must be a
    mean-free grid of the same resolution.
    """
    rho = np.asarray(rho, dtype=float)
    base = approx_solution(field, orbit, eps, with_correction,
                           n_phi=rho.shape[0], n_theta=rho.shape[1])
    state = PatchState(eps=eps, level=orbit.level,
                       r=base.r + eps ** (1.0 + mu) * rho,
                       orbit=orbit, gamma=field.gamma)
    res = eval_residual(field, orbit, state)
    s = eps ** -(2.0 + mu)
    return Residual(values=s * res.values, max_norm=s * res.max_norm,
                    l2_norm=s * res.l2_norm)


# ----------------------------------------------------------------------
# rigid rotation in the unit disc


def _rigid_shape(h: NDArray[np.float64], th: NDArray[np.float64]):
    """Cosine-series samples of the rigid shape field."""
    ns = np.arange(h.shape[0])
    return np.cos(np.outer(th, ns)) @ h


def _rigid_residual(q: float, eps: float, omega: float,
                    h: NDArray[np.float64], n_grid: int = 256
                    ) -> NDArray[np.float64]:
    """Residual of the rigidly rotating patch ansatz on a theta grid.

    The patch boundary is ``q + eps R e^{i theta}`` rotating at rate
    omega about the disc center, ``R = (1 + 2 eps q r)^{1/2}`` with r the
    cosine series of h.  Self-induction reuses the boundary reduction of
    the area log potential; the disc-image term is integrated by the
    polar tensor rule and differentiated spectrally.
    """
    th = grid(n_grid)
    r = _rigid_shape(h, th)
    radius = np.sqrt(1.0 + 2.0 * eps * q * r)
    z = radius * np.exp(1j * th)

    term1 = eps ** 2 * omega * deriv(r)
    term2 = omega * deriv(radius * np.cos(th))
    self_ind = _theta_psi1(z) / (eps * q)

    tl, wl = _gauss01(GL_RADIAL)
    xe, we = leggauss(GL_ANGULAR)
    eta = math.pi * (xe + 1.0)
    weta = 0.5 * we
    rad_eta = np.sqrt(1.0 + 2.0 * eps * q * _rigid_shape(h, eta))
    ell = rad_eta[:, None] * tl[None, :]
    wgt = weta[:, None] * rad_eta[:, None] ** 2 * (wl * tl)[None, :]
    ypts = q + eps * ell * np.exp(1j * eta)[:, None]

    xbar = np.conj(q + eps * z)
    mod = np.abs(1.0 - xbar[:, None, None] * ypts[None, :, :])
    pot = np.einsum("jqs,qs->j", np.log(mod), wgt)
    image = deriv(pot) / (eps * q)

    return term1 + term2 - self_ind + image


def rigid_omega_exact(q: float) -> float:
    """Rotation rate of the point-vortex limit, ``1 / (2 (1 - q^2))``."""
    return 1.0 / (2.0 * (1.0 - q * q))


def rigid_solve(q: float, eps: float, n_modes: int = 24,
                n_grid: int = 256, tol: float = RIGID_TOL,
                max_iter: int = RIGID_MAX_ITER):
    """Rigidly rotating vortex patch in the unit disc.

    Solves for the rotation rate and the even shape correction of a patch
    of radius scale eps centered at distance q from the disc center, by
    Newton iteration with the frozen eps = 0 linearization: the rate
    pairs with the first sine mode of the residual and each cosine mode
    n >= 2 of the shape pairs with the matching sine mode.

    Parameters
    ----------
    q : float
        Center offset, ``|q| <= 0.9``.
    eps : float
        Patch radius scale, ``0 <= eps <= 0.05``.
    n_modes : int, optional
        Highest cosine mode solved for.
    n_grid : int, optional
        Collocation grid size.
    tol : float, optional
        Convergence threshold on the full sine spectrum of the residual.
    max_iter : int, optional

    Returns
    -------
    omega : float
        Rotation rate.
    h : ndarray of shape (n_modes + 1,)
        Cosine coefficients of the shape field; entries 0 and 1 are zero.

    Raises
    ------
    DomainError
        Parameter out of range.
    ConvergenceError
        Newton iteration stagnated above tol.
    """
    if not abs(q) <= RIGID_Q_MAX:
        raise DomainError("|q| must not exceed %.1f" % RIGID_Q_MAX)
    if not 0.0 <= eps <= RIGID_EPS_MAX:
        raise DomainError("eps must lie in [0, %.2f]" % RIGID_EPS_MAX)
    if n_modes < 2:
        raise DomainError("n_modes must be at least 2")

    omega = rigid_omega_exact(q)
    h = np.zeros(n_modes + 1)
    if eps == 0.0 or q == 0.0:
        # Degenerate limits: the circular patch already rotates rigidly.
        return omega, h

    ns = np.arange(n_modes + 1)
    best = math.inf
    for _ in range(max_iter):
        res = _rigid_residual(q, eps, omega, h, n_grid)
        a = sine_coefficients(res)
        worst = float(np.abs(a).max())
        if worst < tol:
            return omega, h
        if not worst < 0.5 * best + tol:
            raise ConvergenceError(
                "rigid Newton iteration stagnated", residual=worst)
        best = min(best, worst)
        omega += a[1]
        h[2:] -= 2.0 * a[2:n_modes + 1] / (ns[2:] - 1.0)
    raise ConvergenceError("rigid Newton iteration did not converge",
                           residual=best, iterations=max_iter)


def rigid_patch_state(q: float, eps: float, h: NDArray[np.float64],
                      n_phi: int = DEFAULT_N_PHI,
                      n_theta: int = DEFAULT_N_THETA,
                      gamma: float = math.pi) -> PatchState:
    """PatchState of a rigid disc solution, riding the circular orbit.

    The rigid shape rotates with the patch, so on the torus grid the
    field is ``r(phi, theta) = q sum_n h_n cos(n (theta - phi))``; the q
    factor converts the rigid normalization ``R^2 = 1 + 2 eps q r`` into
    the general one.  The attached orbit is the exact circle of radius q
    at the point-vortex rate.
    """
    lam = -0.25 * math.log(1.0 - q * q)
    period = 4.0 * math.pi ** 2 * (1.0 - q * q) / gamma
    m0 = max(DEFAULT_N_PHI, n_phi)
    orbit = PeriodicOrbit(level=lam, period=period,
                          samples=q * np.exp(1j * grid(m0)),
                          area=math.pi * q * q)
    phis = grid(n_phi)
    thetas = grid(n_theta)
    diff = thetas[None, :] - phis[:, None]
    ns = np.arange(h.shape[0])
    r = q * (np.cos(diff[:, :, None] * ns[None, None, :]) @ h)
    return PatchState(eps=eps, level=lam, r=r, orbit=orbit, gamma=gamma)


# ----------------------------------------------------------------------
# contour-dynamics time stepping


def _polygon_area(nodes: NDArray[np.complex128]) -> float:
    x, y = nodes.real, nodes.imag
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def _polygon_centroid(nodes: NDArray[np.complex128]) -> complex:
    x, y = nodes.real, nodes.imag
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return complex(cx, cy)


def _has_self_intersection(nodes: NDArray[np.complex128]) -> bool:
    """Strict segment-crossing test over all non-adjacent edge pairs."""
    n = nodes.shape[0]
    a = nodes
    b = np.roll(nodes, -1)
    d = b - a

    def side(p, q, t):
        # sign of cross(q - p, t - p)
        u = q - p
        v = t - p
        return u.real * v.imag - u.imag * v.real

    s1 = side(a[:, None], b[:, None], a[None, :])
    s2 = side(a[:, None], b[:, None], b[None, :])
    s3 = side(a[None, :], b[None, :], a[:, None])
    s4 = side(a[None, :], b[None, :], b[:, None])
    del d
    crossing = (s1 * s2 < 0.0) & (s3 * s4 < 0.0)
    i = np.arange(n)
    adj = (np.abs(i[:, None] - i[None, :]) <= 1) | \
          (np.abs(i[:, None] - i[None, :]) == n - 1)
    return bool(np.any(crossing & ~adj))


def _self_log_integral(nodes: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Normalized boundary integral (2 pi)^{-1} \\oint log|x_i - y| dy."""
    n = nodes.shape[0]
    th = grid(n)
    zp = _cderiv(nodes)
    conv = _clog2sin(zp)
    dz = nodes[:, None] - nodes[None, :]
    den = 2.0 * np.abs(np.sin(0.5 * (th[:, None] - th[None, :])))
    idx = np.arange(n)
    den[idx, idx] = 1.0
    ratio = np.abs(dz) / den
    ratio[idx, idx] = np.abs(zp)
    smooth = np.mean(np.log(ratio) * zp[None, :], axis=1)
    return conv + smooth


def _cross_log_integral(targets: NDArray[np.complex128],
                        nodes: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Same integral for targets away from the source boundary."""
    zp = _cderiv(nodes)
    return np.mean(np.log(np.abs(targets[:, None] - nodes[None, :]))
                   * zp[None, :], axis=1)


def _image_quadrature(nodes: NDArray[np.complex128], rings: int, sectors: int):
    """Polar quadrature points and weights covering the patch interior."""
    n = nodes.shape[0]
    zp = _cderiv(nodes)
    if n % sectors == 0 and sectors < n:
        stride = n // sectors
        yb, ypb = nodes[::stride], zp[::stride]
    else:
        sectors = n
        yb, ypb = nodes, zp
    c0 = _polygon_centroid(nodes)
    jac = np.imag(np.conj(yb - c0) * ypb)
    tl, wl = _gauss01(rings)
    pts = c0 + tl[:, None] * (yb - c0)[None, :]
    wgt = (2.0 * math.pi / sectors) * (wl * tl)[:, None] * jac[None, :]
    return pts, wgt


def _node_velocities(field: PotentialField, node_sets, omega0s,
                     rings: int = 8, sectors: int = 64):
    """Velocities induced on every node of every patch.

    The vorticity of patch k is the constant ``omega0s[k]``; the direct
    part is the desingularized boundary log integral and the domain
    feedback integrates the regular-kernel gradient over each patch by
    the polar rule.  Returns one complex velocity array per patch.
    """
    n_sets = len(node_sets)
    phis = [np.asarray(field.map.phi(nds), dtype=complex) for nds in node_sets]
    dphis = [np.asarray(field.map.phi_derivs(nds)[0], dtype=complex)
             for nds in node_sets]
    vels = [np.zeros(nds.shape[0], dtype=complex) for nds in node_sets]
    guard = 1e-6 * field.map.diameter()

    for s in range(n_sets):
        src = node_sets[s]
        w0 = omega0s[s]
        ypts, wgt = _image_quadrature(src, rings, sectors)
        phi_y = np.asarray(field.map.phi(ypts.ravel()),
                           dtype=complex).reshape(ypts.shape)
        for t in range(n_sets):
            tgt = node_sets[t]
            if t == s:
                direct = _self_log_integral(src)
            else:
                direct = _cross_log_integral(tgt, src)
            dx = tgt[:, None, None] - ypts[None, :, :]
            px = phis[t][:, None, None]
            dpx = dphis[t][:, None, None]
            pole = np.abs(dx) < guard
            if np.any(pole):
                dx = np.where(pole, 1.0, dx)
            kern = (dpx / (px - phi_y[None, :, :]) - 1.0 / dx
                    + dpx * np.conj(phi_y[None, :, :])
                    / (1.0 - px * np.conj(phi_y[None, :, :])))
            if np.any(pole):
                kern = np.where(pole, _near_diag_kernel(field, tgt, ypts, pole),
                                kern)
            feedback = np.einsum("iqs,qs->i", kern, wgt)
            vels[t] += w0 * (-direct + (0.5j / math.pi) * np.conj(feedback))
    return vels


def _near_diag_kernel(field, tgt, ypts, pole):
    """Series value of the regular kernel gradient near coincident points."""
    d1, d2, d3 = field.map.phi_derivs(tgt)
    a = (d2 / (2.0 * d1))[:, None, None]
    b = (d3 / (6.0 * d1))[:, None, None]
    dy = ypts[None, :, :] - tgt[:, None, None]
    px = np.asarray(field.map.phi(tgt), dtype=complex)[:, None, None]
    phi_y = np.asarray(field.map.phi(ypts.ravel()),
                       dtype=complex).reshape(ypts.shape)[None, :, :]
    image = (d1[:, None, None] * np.conj(phi_y)) / (1.0 - px * np.conj(phi_y))
    series = a + (b - a * a) * dy + image
    return np.where(pole, series, 0.0)


def _energy_labels(n_pairs: int, seed: int):
    """Frozen sample labels, one jittered draw per 4-d panel."""
    rng = np.random.default_rng(seed)
    m = max(2, round(n_pairs ** 0.25))
    idx = np.indices((m, m, m, m)).reshape(4, -1)
    u = (idx + rng.random((4, m ** 4))) / m
    return u[0], 2.0 * math.pi * u[1], u[2], 2.0 * math.pi * u[3]


def _curve_at(nodes: NDArray[np.complex128], s: NDArray[np.float64]):
    """Trigonometric interpolation of the node curve and its derivative."""
    n = nodes.shape[0]
    c = np.fft.fft(nodes) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    basis = np.exp(1j * np.outer(k, s))
    vals = c @ basis
    dervs = (1j * k * c) @ basis
    return vals, dervs


def _energy_estimate(field: PotentialField, nodes, omega0, labels):
    """Monte-Carlo interaction energy of one patch (diagnostic accuracy)."""
    from .greenrobin import green_regular

    l1, s1, l2, s2 = labels
    c0 = _polygon_centroid(nodes)
    x1, d1 = _curve_at(nodes, s1)
    x2, d2 = _curve_at(nodes, s2)
    j1 = np.imag(np.conj(x1 - c0) * d1)
    j2 = np.imag(np.conj(x2 - c0) * d2)
    y1 = c0 + l1 * (x1 - c0)
    y2 = c0 + l2 * (x2 - c0)
    g = (np.log(np.abs(y1 - y2)) + green_regular(field, y1, y2))
    val = np.mean(g * (l1 * j1) * (l2 * j2))
    return omega0 ** 2 * math.pi * float(val)


def _phi123(y: NDArray[np.float64]):
    """phi_1..phi_3 of the purely imaginary argument ``i y``, elementwise.

    Closed forms in real arithmetic; the cancellation-prone differences
    switch to Taylor forms near zero.
    """
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 0.05
    ys = np.where(small, 0.0, y)  # keep the generic branch division-safe
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc_h = np.sinc(y / (2.0 * math.pi))
        phi1 = np.exp(0.5j * y) * sinc_h
        re2 = 0.5 * sinc_h ** 2
        im2 = np.where(small, y / 6.0 - y ** 3 / 120.0,
                       (y - np.sin(ys)) / np.where(small, 1.0, ys ** 2))
        re3 = np.where(small, 1.0 / 6.0 - y ** 2 / 120.0 + y ** 4 / 5040.0,
                       (y - np.sin(ys)) / np.where(small, 1.0, ys ** 3))
        im3 = np.where(small, y / 24.0 - y ** 3 / 720.0,
                       (np.cos(ys) - 1.0 + ys ** 2 / 2.0)
                       / np.where(small, 1.0, ys ** 3))
    return phi1, re2 + 1j * im2, re3 + 1j * im3


def _kelvin_sigma(n: int, omega0: float) -> NDArray[np.float64]:
    """Boundary-wave frequencies of a uniform core, one per rfft mode."""
    k = np.arange(n // 2 + 1, dtype=float)
    sigma = 0.5 * omega0 * np.maximum(k - 1.0, 0.0)
    if n % 2 == 0:
        sigma[-1] = 0.0  # Nyquist carries no representable rotation
    return sigma


def _apply_mode_factor(rho, mult):
    return np.fft.irfft(np.fft.rfft(rho) * mult, rho.shape[0])


def _pinned_rates(u, rho, expi, emti):
    """Radius rate and center gauge rate of the patch-polar kinematics.

    The boundary is ``w = c + rho(theta) e^{i theta}``; matching normal
    velocities against the boundary velocity field u gives
    ``rho_t = Im{(u - c_t)~ w_theta} / rho``.  The center is a gauge
    choice and is pinned by keeping the first angular mode of ``rho_t``
    at zero.
    """
    wt = (deriv(rho) + 1j * rho) * expi
    drive = (u.conj() * wt).imag / rho
    bx = wt.imag / rho
    by = wt.real / rho
    pdrive = (drive * emti).mean()
    pbx = (bx * emti).mean()
    pby = (by * emti).mean()
    mat = np.array([[pbx.real, -pby.real], [pbx.imag, -pby.imag]])
    cx, cy = np.linalg.solve(mat, [pdrive.real, pdrive.imag])
    return drive - cx * bx + cy * by, complex(cx, cy)


def _polar_rates(field, c, rho, expi, emti, omega0, rings, sectors):
    """Rates of a single free patch, velocities evaluated in place."""
    w = c + rho * expi
    u = _node_velocities(field, [w], [omega0], rings=rings, sectors=sectors)[0]
    return _pinned_rates(u, rho, expi, emti)


def evolve_patch(field: PotentialField, state: PatchState, dt: float,
                 steps: int, n_nodes: int | None = None,
                 energy_every: int = 0, energy_pairs: int = 4096,
                 intersection_every: int = 25, image_rings: int = 8,
                 image_sectors: int = 64, seed: int = 0):
    """Evolve a patch boundary by contour dynamics.

    The first phi-slice of the state is tracked in patch-polar
    variables, a drifting center plus a radius field on uniform polar
    angles, so only the normal velocity enters the dynamics; the node
    velocities are the desingularized boundary log integral plus the
    domain feedback through the regular kernel.  Each radius mode is
    advanced with the exact propagator of its self-induced phase (a
    uniform core turns mode ``k`` at ``omega0 (k-1)/2``) inside a
    fourth-order exponential scheme whose phi-function weights average,
    rather than strobe, the wave phases that one step cannot resolve.
    Advecting node labels with the raw velocity instead would put the
    whole ``1/eps^2`` self-spin into the time integration, whose
    amplitude error would swamp the area budget at any affordable step
    size; a plain integrating-factor tableau in these variables goes
    unstable near step resonances of the unresolved wave phases.  Area and
    centroid are recorded every step; the interaction energy, a
    Monte-Carlo estimate with frozen sample labels so that its drift is
    meaningful, every ``energy_every`` steps when requested.

    Parameters
    ----------
    field : PotentialField
    state : PatchState
        Initial shape; node count defaults to its theta resolution.
    dt : float
        Time step.
    steps : int
        Number of steps.
    n_nodes : int, optional
        Boundary resolution for the evolution.
    energy_every : int, optional
        Energy cadence in steps; 0 disables the estimate.
    energy_pairs : int, optional
        Monte-Carlo sample pairs.
    intersection_every : int, optional
        Cadence of the self-intersection scan.
    image_rings, image_sectors : int, optional
        Polar resolution of the feedback quadrature.
    seed : int, optional
        Seed of the frozen energy sample labels.

    Returns
    -------
    list of PatchFrame
        ``steps + 1`` frames including the initial one.

    Raises
    ------
    DomainError
        A node left the domain.
    TopologyError
        The boundary self-intersected or stopped being star-shaped
        about the tracked center.
    """
    nodes = state.boundary_nodes(n_nodes)
    n = nodes.shape[0]
    omega0 = state.gamma / (math.pi * state.eps ** 2)
    if not np.all(field.map.contains(nodes)):
        raise DomainError("initial patch boundary leaves the domain")
    labels = _energy_labels(energy_pairs, seed) if energy_every else None

    c = complex(_center_samples(state.orbit, state.n_phi)[0])
    rho = np.abs(nodes - c)
    th = grid(n)
    expi = np.exp(1j * th)
    emti = np.exp(-1j * th)
    sigma = _kelvin_sigma(n, omega0)
    y = -sigma * dt
    e_full = np.exp(1j * y)
    e_half = np.exp(0.5j * y)
    p1h, _, _ = _phi123(0.5 * y)
    q_half = (0.5 * dt) * p1h
    p1, p2, p3 = _phi123(y)
    w1 = dt * (p1 - 3.0 * p2 + 4.0 * p3)
    w23 = dt * (2.0 * p2 - 4.0 * p3)
    w4 = dt * (4.0 * p3 - p2)
    rate = -1j * sigma

    def slow(rho_s, c_s):
        drho, dc = _polar_rates(field, c_s, rho_s, expi, emti, omega0,
                                image_rings, image_sectors)
        return drho - _apply_mode_factor(rho_s, rate), dc

    def frame(t, y, with_energy):
        energy = (_energy_estimate(field, y, omega0, labels)
                  if with_energy and labels is not None else None)
        return PatchFrame(t=t, nodes=y.copy(), area=_polygon_area(y),
                          centroid=_polygon_centroid(y), energy=energy)

    frames = [frame(0.0, nodes, bool(energy_every))]
    for k in range(1, steps + 1):
        n1r, n1c = slow(rho, c)
        rho_h = _apply_mode_factor(rho, e_half)
        ar = rho_h + _apply_mode_factor(n1r, q_half)
        ac = c + 0.5 * dt * n1c
        n2r, n2c = slow(ar, ac)
        br = rho_h + _apply_mode_factor(n2r, q_half)
        bc = c + 0.5 * dt * n2c
        n3r, n3c = slow(br, bc)
        cr = (_apply_mode_factor(ar, e_half)
              + _apply_mode_factor(2.0 * n3r - n1r, q_half))
        cc = ac + 0.5 * dt * (2.0 * n3c - n1c)
        n4r, n4c = slow(cr, cc)
        rho = (_apply_mode_factor(rho, e_full)
               + _apply_mode_factor(n1r, w1)
               + _apply_mode_factor(n2r + n3r, w23)
               + _apply_mode_factor(n4r, w4))
        c = c + (dt / 6.0) * (n1c + 2.0 * (n2c + n3c) + n4c)
        if not np.all(rho > 0.0):
            raise TopologyError(
                "patch stopped being star-shaped at step %d" % k)
        nodes = c + rho * expi
        if not np.all(field.map.contains(nodes)):
            raise DomainError("patch node left the domain at step %d" % k)
        if (intersection_every and k % intersection_every == 0
                or k == steps) and _has_self_intersection(nodes):
            raise TopologyError("patch boundary self-intersected at step %d" % k)
        want_energy = bool(energy_every) and (k % energy_every == 0 or k == steps)
        frames.append(frame(k * dt, nodes, want_energy))
    return frames
