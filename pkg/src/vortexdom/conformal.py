"""Conformal maps between bounded simply connected domains and the unit disc.

Each map Phi sends its domain D onto the open unit disc with Phi(xi0) = 0 and
Phi'(xi0) > 0 at a distinguished interior point xi0, and exposes analytic
derivatives up to third order together with the inverse F and its derivatives.
Six families are provided: the disc itself, ellipses, rectangles, regular
polygons, symmetric polygons given by prevertex data, and circular sectors.

Polygonal domains are handled through the side-angle integral representation

    F(w) = alpha * Integral_0^w  Prod_k (xi - p_k)^(-mu_k) dxi + beta,

with prevertices p_k on the unit circle; the branch of every factor is
tracked continuously along radial integration paths anchored at w = 0.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.special import ellipe, gamma as _gamma, roots_jacobi

from .errors import ConvergenceError, DomainError, PathError, ProximityError
from .specialfn import EllipticModulus, elliptic_K, gauss_legendre, jacobi_sn_cn_dn

# boundary guard, relative to domain diameter
BOUNDARY_GUARD = 1e-10
# minimal allowed distance between an integration path and a prevertex
PREVERTEX_GUARD = 1e-6

__all__ = [
    "BOUNDARY_GUARD",
    "PREVERTEX_GUARD",
    "ConformalMap",
    "DiscMap",
    "EllipseMap",
    "PolygonSpec",
    "RectangleMap",
    "RegularPolygonMap",
    "SectorMap",
    "SymPolygonMap",
    "f_inverse",
    "make_map",
    "phi",
    "phi_derivs",
    "sc_integral",
    "schwarzian_of_F",
    "sector_map",
]


def _as_points(z):
    """Normalize input to a complex array plus a scalar flag."""
    arr = np.asarray(z, dtype=complex)
    return np.atleast_1d(arr), arr.ndim == 0


def _restore(values, scalar):
    return complex(values[0]) if scalar and values.size == 1 else values


def _restore_real(values, scalar):
    return float(values[0]) if scalar and values.size == 1 else values


def _inverse_triple(d1, d2, d3):
    """Derivatives of the inverse function from (f', f'', f''') at the image point."""
    g1 = 1.0 / d1
    g2 = -d2 / d1 ** 3
    g3 = (3.0 * d2 ** 2 - d1 * d3) / d1 ** 5
    return g1, g2, g3


def _schwarzian_from_triple(d1, d2, d3):
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


# ---------------------------------------------------------------------------
# radial-path quadrature grid, shared by all side-angle integrals
# ---------------------------------------------------------------------------

def _build_path_grid():
    # one panel on [0, 1/2], then panels geometrically refined toward t = 1
    # down to 2^-36 so endpoint distances ~1e-10 stay resolved
    bp = [0.0, 0.5] + [1.0 - 2.0 ** (-j) for j in range(2, 37)] + [1.0]
    ref = gauss_legendre(16)
    ts, ws = [], []
    for a, b in zip(bp[:-1], bp[1:]):
        ts.append(0.5 * (b - a) * ref.nodes + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * ref.weights)
    t = np.concatenate(ts)
    w = np.concatenate(ws)
    # trailing endpoint node carries zero weight; it is the chain terminus
    # where the integrand itself is evaluated
    return np.append(t, 1.0), np.append(w, 0.0)


_PATH_T, _PATH_W = _build_path_grid()


def _chain_args(xi, p):
    """Continuous argument of (xi - p) along ordered path rows starting at 0.

    xi has shape (npts, nn); each row lists points in order along a straight
    path whose first implicit point is the origin.  Increment angles between
    consecutive points are < pi because straight sub-segments avoiding p
    subtend less than a half turn, so principal-log increments are exact.
    """
    rel = xi - p
    first = np.angle(rel[:, :1] / (-p))
    inc = np.angle(rel[:, 1:] / rel[:, :-1])
    return np.angle(-p) + np.cumsum(np.concatenate([first, inc], axis=1), axis=1)


def _segment_prevertex_distance(v, prevertices):
    """Min distance from each segment [0, v_i] to the prevertex set."""
    v = np.atleast_1d(v)
    vv = np.abs(v) ** 2
    d = np.full(v.shape, np.inf)
    for p in prevertices:
        with np.errstate(invalid="ignore", divide="ignore"):
            tstar = np.clip(np.real(np.conj(v) * p) / np.where(vv > 0, vv, 1.0), 0.0, 1.0)
        d = np.minimum(d, np.abs(tstar * v - p))
    return d


# ---------------------------------------------------------------------------
# polygon prevertex data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolygonSpec:
    """Prevertex angles, exterior angle fractions, scale and shift of a polygon map.

    Parameters
    ----------
    thetas : array of float
        Prevertex angles, strictly increasing in [0, 2*pi).
    mus : array of float
        Exterior angle fractions in (-1, 1); their sum must equal 2.
    alpha : complex
        Multiplicative scale of the integral representation.
    beta : complex
        Additive shift (the image of w = 0).
    """

    thetas: NDArray[np.float64]
    mus: NDArray[np.float64]
    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0 + 0.0j

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        mus = np.asarray(self.mus, dtype=float)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if thetas.ndim != 1 or thetas.size < 3:
            raise DomainError("need at least three prevertices")
        if mus.shape != thetas.shape:
            raise DomainError("angle and prevertex lists differ in length")
        if np.any(thetas < 0.0) or np.any(thetas >= 2.0 * np.pi):
            raise DomainError("prevertex angles must lie in [0, 2*pi)")
        if np.any(np.diff(thetas) <= 0.0):
            raise DomainError("prevertex angles must be strictly increasing")
        if np.any(np.abs(mus) >= 1.0):
            raise DomainError("exterior angle fractions must lie in (-1, 1)")
        if abs(float(np.sum(mus)) - 2.0) > 1e-12:
            raise DomainError("exterior angle fractions must sum to 2")
        if self.alpha == 0:
            raise DomainError("scale must be nonzero")

    @property
    def prevertices(self) -> NDArray[np.complex128]:
        return np.exp(1j * self.thetas)

    @property
    def is_convex(self) -> bool:
        return bool(np.all(self.mus > 0.0))

    @classmethod
    def symmetric(cls, half_thetas, half_mus, alpha=1.0, beta=0.0):
        """Centrally symmetric spec from upper-half prevertex data.

        half_thetas lie in (0, pi) and must be closed under theta -> pi - theta
        with matching angle fractions; each entry is doubled by its antipode,
        which places the normalization point of the assembled map at w = 0.
        """
        th = np.asarray(half_thetas, dtype=float)
        mu = np.asarray(half_mus, dtype=float)
        if th.ndim != 1 or th.shape != mu.shape:
            raise DomainError("mismatched half-list shapes")
        if np.any(th <= 0.0) or np.any(th >= np.pi):
            raise DomainError("upper half-list angles must lie in (0, pi)")
        # axis symmetry: the set must map to itself under theta -> pi - theta
        for t, m in zip(th, mu):
            j = np.argmin(np.abs(th - (np.pi - t)))
            if abs(th[j] - (np.pi - t)) > 1e-12 or abs(mu[j] - m) > 1e-12:
                raise DomainError("half-list is not symmetric about the imaginary axis")
        if abs(float(np.sum(mu)) - 1.0) > 1e-12:
            raise DomainError("upper half-list angle fractions must sum to 1")
        full_th = np.concatenate([th, th + np.pi])
        full_mu = np.concatenate([mu, mu])
        order = np.argsort(full_th)
        return cls(full_th[order], full_mu[order], alpha, beta)

    @classmethod
    def rectangle(cls, theta1: float):
        """Four prevertices at +-exp(+-i*theta1), each with angle fraction 1/2."""
        if not 0.0 < theta1 < 0.5 * np.pi:
            raise DomainError("rectangle prevertex angle must lie in (0, pi/2)")
        return cls.symmetric([theta1, np.pi - theta1], [0.5, 0.5])


def _sc_core(spec: PolygonSpec, v, *, guard: float, chunk: int = 1024):
    """Integrate the prevertex product along radial paths 0 -> v.

    Returns (F(v), F'(v)) with the branch of every factor continued from its
    principal value at 0.  `guard` is the minimal allowed distance between a
    path and any prevertex.
    """
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    pre = spec.prevertices
    dmin = _segment_prevertex_distance(v, pre)
    if np.any(dmin < guard):
        raise PathError("integration path passes within %.1e of a prevertex" % guard)
    F = np.empty(v.shape, dtype=complex)
    Fp = np.empty(v.shape, dtype=complex)
    for lo in range(0, v.size, chunk):
        sel = slice(lo, min(lo + chunk, v.size))
        xi = v[sel, None] * _PATH_T[None, :]
        acc = np.zeros(xi.shape, dtype=complex)
        for p, mu in zip(pre, spec.mus):
            rel = xi - p
            acc -= mu * (np.log(np.abs(rel)) + 1j * _chain_args(xi, p))
        integrand = np.exp(acc)
        F[sel] = spec.beta + spec.alpha * v[sel] * (integrand[:, :-1] @ _PATH_W[:-1])
        Fp[sel] = spec.alpha * integrand[:, -1]
    return F, Fp


def sc_integral(spec: PolygonSpec, z):
    """Polygon map value F(z) along the straight path from 0 to z.

    The path must stay farther than ``PREVERTEX_GUARD`` from every prevertex.

    Parameters
    ----------
    spec : PolygonSpec
        Prevertex data of the map.
    z : complex or array
        Target point(s); typically inside the closed unit disc.

    Returns
    -------
    complex or array
        F(z) = alpha * integral + beta with continuously tracked branches.
    """
    pts, scalar = _as_points(z)
    F, _ = _sc_core(spec, pts, guard=PREVERTEX_GUARD)
    return _restore(F, scalar)


def _sc_vertex(spec: PolygonSpec, k: int) -> complex:
    """Vertex image F(p_k), integrating through the endpoint singularity.

    The smooth body of the path uses the shared graded grid; the final stretch
    uses a Gauss-Jacobi rule absorbing the (1 - t)^(-mu_k) endpoint weight.
    The singular factor keeps the constant argument arg(-p_k) along the ray.
    """
    pre = spec.prevertices
    mus = spec.mus
    p, mu = pre[k], mus[k]
    gaps = np.abs(pre - p)
    gaps = gaps[gaps > 0]
    delta0 = min(0.1, 0.5 * float(gaps.min()))
    body_t = (1.0 - delta0) * _PATH_T[:-1]
    body_w = (1.0 - delta0) * _PATH_W[:-1]
    xj, wj = roots_jacobi(24, 0.0, -mu)
    s = delta0 * (xj + 1.0) / 2.0
    tail_t = 1.0 - s[::-1]
    t_all = np.concatenate([body_t, tail_t])
    xi = (p * t_all)[None, :]
    acc_other = np.zeros(xi.shape, dtype=complex)
    acc_body_full = np.zeros((1, body_t.size), dtype=complex)
    for pj, muj in zip(pre, mus):
        rel = xi - pj
        term = -muj * (np.log(np.abs(rel)) + 1j * _chain_args(xi, pj))
        if pj != p:
            acc_other += term
        acc_body_full += term[:, : body_t.size]
    nb = body_t.size
    body_int = float(0) if nb == 0 else (np.exp(acc_body_full[0]) @ body_w)
    tail_vals = np.exp(acc_other[0, nb:])[::-1]  # back to increasing-s order
    sing_phase = np.exp(-1j * mu * np.angle(-p))
    tail_int = sing_phase * (delta0 / 2.0) ** (1.0 - mu) * (tail_vals @ wj)
    return complex(spec.beta + spec.alpha * p * (body_int + tail_int))


def _sc_pole_sums(spec: PolygonSpec, v):
    """(sum mu/(v-p), sum mu/(v-p)^2) over the prevertex list."""
    rel = v[..., None] - spec.prevertices
    s1 = np.sum(spec.mus / rel, axis=-1)
    s2 = np.sum(spec.mus / rel ** 2, axis=-1)
    return s1, s2


# ---------------------------------------------------------------------------
# the map interface
# ---------------------------------------------------------------------------

class ConformalMap(ABC):
    """Conformal equivalence between a bounded domain and the unit disc.

    ``phi`` maps the domain onto the disc with ``phi(xi0) = 0`` and
    ``phi'(xi0) > 0``; ``f_inverse`` is its functional inverse.  All
    derivatives are analytic (no finite differences anywhere).
    """

    domain_kind: str = "abstract"

    @property
    @abstractmethod
    def xi0(self) -> complex:
        """Normalization point: the zero of phi."""

    @abstractmethod
    def diameter(self) -> float:
        """Diameter of the domain."""

    @abstractmethod
    def boundary_distance(self, z):
        """Distance to the boundary; negative or zero outside the open domain."""

    @abstractmethod
    def boundary_length(self) -> float:
        """Perimeter of the domain."""

    @abstractmethod
    def phi(self, z):
        """Map a domain point into the unit disc."""

    @abstractmethod
    def phi_derivs(self, z):
        """(phi', phi'', phi''') at domain points."""

    @abstractmethod
    def f_inverse(self, w):
        """Map a disc point back into the domain."""

    def contains(self, z):
        d = self.boundary_distance(z)
        return d > 0 if np.isscalar(d) else np.asarray(d) > 0

    def _require_interior(self, pts):
        d = np.atleast_1d(np.asarray(self.boundary_distance(pts)))
        if np.any(d <= BOUNDARY_GUARD * self.diameter()):
            raise ProximityError(
                "point within the boundary guard (dist <= %.1e)"
                % (BOUNDARY_GUARD * self.diameter())
            )

    def _require_in_disc(self, w):
        if np.any(np.abs(np.atleast_1d(w)) >= 1.0 - 1e-10):
            raise ProximityError("disc argument must satisfy |w| < 1 - 1e-10")

    def inverse_derivs(self, w):
        """(F', F'', F''') of the inverse map at disc points."""
        pts, scalar = _as_points(w)
        z = np.atleast_1d(np.asarray(self.f_inverse(pts)))
        d1, d2, d3 = (np.atleast_1d(np.asarray(t)) for t in self.phi_derivs(z))
        g1, g2, g3 = _inverse_triple(d1, d2, d3)
        return _restore(g1, scalar), _restore(g2, scalar), _restore(g3, scalar)

    def schwarzian_of_F(self, w):
        """Schwarzian derivative of the inverse map at disc points."""
        g1, g2, g3 = self.inverse_derivs(w)
        return _schwarzian_from_triple(g1, g2, g3)

    def schwarzian_of_phi(self, z):
        """Schwarzian of the forward map; equals -S(F)(phi(z)) * phi'(z)^2."""
        d1, d2, d3 = self.phi_derivs(z)
        return _schwarzian_from_triple(d1, d2, d3)

    def phi_with_derivs(self, z):
        """(phi, phi', phi'', phi''') in one call; subclasses may share work."""
        return (self.phi(z),) + tuple(self.phi_derivs(z))

    def __repr__(self):
        return "%s(kind=%s)" % (type(self).__name__, self.domain_kind)


class DiscMap(ConformalMap):
    """The unit disc with the identity map."""

    domain_kind = "disc"

    @property
    def xi0(self) -> complex:
        return 0.0 + 0.0j

    def diameter(self) -> float:
        return 2.0

    def boundary_length(self) -> float:
        return 2.0 * math.pi

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        return _restore_real(1.0 - np.abs(pts), scalar)

    def phi(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        return _restore(pts.copy(), scalar)

    def phi_derivs(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        one = np.ones(pts.shape, dtype=complex)
        zero = np.zeros(pts.shape, dtype=complex)
        return _restore(one, scalar), _restore(zero, scalar), _restore(zero.copy(), scalar)

    def f_inverse(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        return _restore(pts.copy(), scalar)


# ---------------------------------------------------------------------------
# ellipse
# ---------------------------------------------------------------------------

class EllipseMap(ConformalMap):
    """Ellipse with semi-axes (a, 1), a > 1, mapped onto the disc.

    The forward map composes a scaled arcsine with the elliptic sine at a
    modulus determined by the axis ratio; its zero sits at the centre.  The
    foci are removable 0/0 points of the arcsine chain, handled by cached
    Taylor expansions recovered from circle samples around each focus.
    """

    domain_kind = "ellipse"

    def __init__(self, a: float):
        if not a > 1.0:
            raise DomainError("ellipse parameter must satisfy a > 1")
        self.a = float(a)
        self._stilde = math.sqrt(a * a - 1.0)
        target = (4.0 / math.pi) * math.asinh(1.0 / self._stilde)
        self.k = self._solve_modulus(target)
        self.modulus = EllipticModulus.from_k(self.k)
        self._c = 2.0 * self.modulus.K / math.pi
        self._a1 = self._c * math.sqrt(self.k) / self._stilde
        self._focus_rho = 0.2 * min(self._stilde, self.a - self._stilde)
        self._taylor = None  # lazily built focus expansion

    @staticmethod
    def _solve_modulus(target: float) -> float:
        def ratio(k):
            return elliptic_K(math.sqrt(1.0 - k * k)) / elliptic_K(k)

        lo, hi = 1e-15, 1.0 - 1e-15
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ratio(mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-16:
                break
        return 0.5 * (lo + hi)

    @property
    def xi0(self) -> complex:
        return 0.0 + 0.0j

    def diameter(self) -> float:
        return 2.0 * self.a

    def boundary_length(self) -> float:
        return 4.0 * self.a * float(ellipe(1.0 - 1.0 / self.a ** 2))

    def _implicit(self, pts):
        return (pts.real / self.a) ** 2 + pts.imag ** 2

    _BD_SCAN = np.linspace(0.0, 0.5 * np.pi, 64)

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        flat = pts.ravel()
        x, y = np.abs(flat.real), np.abs(flat.imag)
        a = self.a
        # nearest boundary parameter: coarse scan, then damped Newton on the
        # derivative of the squared distance, fully vectorized
        tg = self._BD_SCAN
        d2 = (a * np.cos(tg)[None, :] - x[:, None]) ** 2 + (
            np.sin(tg)[None, :] - y[:, None]
        ) ** 2
        ti = tg[np.argmin(d2, axis=1)]
        for _ in range(30):
            c, s = np.cos(ti), np.sin(ti)
            dx, dy = a * c - x, s - y
            g = -dx * a * s + dy * c
            gg = -dx * a * c - dy * s + a * a * s * s + c * c
            step = g / np.where(np.abs(gg) > 1e-300, gg, 1.0)
            np.clip(step, -0.2, 0.2, out=step)
            ti = np.clip(ti - step, 0.0, 0.5 * np.pi)
            if np.all(np.abs(step) < 1e-14):
                break
        c, s = np.cos(ti), np.sin(ti)
        dist = np.hypot(a * c - x, s - y)
        inside = (x / a) ** 2 + y ** 2 < 1.0
        out = np.where(inside, dist, -dist).reshape(pts.shape)
        return _restore_real(out, scalar)

    def _phi_raw(self, pts):
        u = self._c * np.arcsin(pts / self._stilde)
        sn, _, _ = jacobi_sn_cn_dn(u, self.k)
        return math.sqrt(self.k) * sn

    def phi(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        return _restore(self._phi_raw(pts), scalar)

    def _chain_all(self, pts):
        """Value and derivative triple away from the foci, one elliptic call."""
        st, c, k = self._stilde, self._c, self.k
        w = pts / st
        A = np.sqrt(1.0 - w * w)
        u = c * np.arcsin(w)
        sn, cn, dn = jacobi_sn_cn_dn(u, k)
        sn1 = cn * dn
        sn2 = -(1.0 + k * k) * sn + 2.0 * k * k * sn ** 3
        sn3 = (6.0 * k * k * sn ** 2 - (1.0 + k * k)) * cn * dn
        u1 = c / (st * A)
        u2 = c * w / (st ** 2 * A ** 3)
        u3 = c * (1.0 + 2.0 * w * w) / (st ** 3 * A ** 5)
        rk = math.sqrt(k)
        val = rk * sn
        d1 = rk * sn1 * u1
        d2 = rk * (sn2 * u1 ** 2 + sn1 * u2)
        d3 = rk * (sn3 * u1 ** 3 + 3.0 * sn2 * u1 * u2 + sn1 * u3)
        return val, d1, d2, d3

    def _chain_derivs(self, pts):
        """Derivative triple away from the foci, by the arcsine-elliptic chain."""
        return self._chain_all(pts)[1:]

    def _focus_coeffs(self):
        if self._taylor is None:
            n = 256
            th = 2.0 * np.pi * np.arange(n) / n
            ring = self._stilde + self._focus_rho * np.exp(1j * th)
            vals = self._phi_raw(ring)
            coef = np.fft.fft(vals) / n
            deg = 48
            c0 = coef[:deg] / self._focus_rho ** np.arange(deg)
            c1 = c0[1:] * np.arange(1, deg)
            c2 = c1[1:] * np.arange(1, deg - 1)
            c3 = c2[1:] * np.arange(1, deg - 2)
            self._taylor = (c0, c1, c2, c3)
        return self._taylor

    @staticmethod
    def _horner(coef, dz):
        acc = np.zeros(dz.shape, dtype=complex)
        for c in coef[::-1]:
            acc = acc * dz + c
        return acc

    def phi_derivs(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        d1 = np.empty(pts.shape, dtype=complex)
        d2 = np.empty(pts.shape, dtype=complex)
        d3 = np.empty(pts.shape, dtype=complex)
        trigger = 0.45 * self._focus_rho
        near_p = np.abs(pts - self._stilde) < trigger
        near_m = np.abs(pts + self._stilde) < trigger
        far = ~(near_p | near_m)
        if np.any(far):
            r1, r2, r3 = self._chain_derivs(pts[far])
            d1[far], d2[far], d3[far] = r1, r2, r3
        if np.any(near_p):
            _, c1, c2, c3 = self._focus_coeffs()
            dz = pts[near_p] - self._stilde
            d1[near_p] = self._horner(c1, dz)
            d2[near_p] = self._horner(c2, dz)
            d3[near_p] = self._horner(c3, dz)
        if np.any(near_m):
            # phi is odd, so derivatives at -z mirror those at z
            _, c1, c2, c3 = self._focus_coeffs()
            dz = -pts[near_m] - self._stilde
            d1[near_m] = self._horner(c1, dz)
            d2[near_m] = -self._horner(c2, dz)
            d3[near_m] = self._horner(c3, dz)
        return _restore(d1, scalar), _restore(d2, scalar), _restore(d3, scalar)

    def phi_with_derivs(self, z):
        # single interior check and a single elliptic evaluation feed both
        # the value and the derivative triple; this sits on the hot path of
        # orbit integration
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        val = np.empty(pts.shape, dtype=complex)
        d1 = np.empty(pts.shape, dtype=complex)
        d2 = np.empty(pts.shape, dtype=complex)
        d3 = np.empty(pts.shape, dtype=complex)
        trigger = 0.45 * self._focus_rho
        near_p = np.abs(pts - self._stilde) < trigger
        near_m = np.abs(pts + self._stilde) < trigger
        far = ~(near_p | near_m)
        if np.any(far):
            val[far], d1[far], d2[far], d3[far] = self._chain_all(pts[far])
        if np.any(near_p):
            c0, c1, c2, c3 = self._focus_coeffs()
            dz = pts[near_p] - self._stilde
            val[near_p] = self._horner(c0, dz)
            d1[near_p] = self._horner(c1, dz)
            d2[near_p] = self._horner(c2, dz)
            d3[near_p] = self._horner(c3, dz)
        if np.any(near_m):
            c0, c1, c2, c3 = self._focus_coeffs()
            dz = -pts[near_m] - self._stilde
            val[near_m] = -self._horner(c0, dz)
            d1[near_m] = self._horner(c1, dz)
            d2[near_m] = -self._horner(c2, dz)
            d3[near_m] = self._horner(c3, dz)
        return (
            _restore(val, scalar),
            _restore(d1, scalar),
            _restore(d2, scalar),
            _restore(d3, scalar),
        )

    def f_inverse(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        z = pts / self._a1
        f = self._implicit(z)
        bad = f > 0.9
        if np.any(bad):
            z[bad] *= np.sqrt(0.9 / f[bad])
        active = np.ones(pts.shape, dtype=bool)
        res = np.abs(self._phi_raw(z) - pts)
        for _ in range(60):
            if not np.any(active):
                break
            za = z[active]
            va, d1, _, _ = self._chain_all(za)
            step = (va - pts[active]) / d1
            znew = za - step
            # damp: stay inside the ellipse and do not let the residual grow
            rnew = np.full(za.shape, np.inf)
            for _ in range(40):
                outside = self._implicit(znew) >= 1.0
                rnew[:] = np.inf
                ok = ~outside
                if np.any(ok):
                    rnew[ok] = np.abs(self._phi_raw(znew[ok]) - pts[active][ok])
                worse = outside | (rnew > res[active] * (1.0 - 1e-4) + 1e-15)
                if not np.any(worse):
                    break
                step = np.where(worse, 0.5 * step, step)
                znew = za - step
            z[active] = znew
            res[active] = rnew
            active = res > 1e-13
        if np.any(res > 1e-9):
            raise ConvergenceError(
                "inverse iteration stalled", residual=float(res.max())
            )
        return _restore(z, scalar)


# ---------------------------------------------------------------------------
# maps defined through the inverse direction (polygonal families)
# ---------------------------------------------------------------------------

class _InverseDefined(ConformalMap):
    """Base for maps whose primary object is F: disc -> domain.

    Pre-composition coordinates: F lives on the disc with a distinguished
    point w0 (the preimage of xi0) and rotation sigma making phi'(xi0) > 0.
    Subclasses provide _F_batch (values and first derivative) and
    _F_triple (first three derivatives), both branch-consistent.
    """

    _w0: complex = 0.0 + 0.0j
    _sigma: float = 0.0

    @abstractmethod
    def _F_batch(self, v):
        """Return (F(v), F'(v)) for an array of disc points."""

    @abstractmethod
    def _F_triple(self, v):
        """Return (F'(v), F''(v), F'''(v)) for an array of disc points."""

    @abstractmethod
    def _schwarzian_F_pre(self, v):
        """Schwarzian of F in pre-composition coordinates."""

    # -- Mobius bookkeeping ------------------------------------------------

    def _mobius(self, v):
        w0 = self._w0
        return np.exp(1j * self._sigma) * (v - w0) / (1.0 - np.conj(w0) * v)

    def _mobius_inv(self, u):
        w0 = self._w0
        e = np.exp(-1j * self._sigma)
        return (w0 + e * u) / (1.0 + np.conj(w0) * e * u)

    def _mobius_inv_derivs(self, u):
        """First three derivatives of the inverse Mobius factor at u."""
        w0 = self._w0
        e = np.exp(-1j * self._sigma)
        a, b, c, d = e, w0, np.conj(w0) * e, 1.0
        det = a * d - b * c
        den = c * u + d
        n1 = det / den ** 2
        n2 = -2.0 * c * det / den ** 3
        n3 = 6.0 * c * c * det / den ** 4
        return n1, n2, n3

    # -- Newton inversion of F ----------------------------------------------

    def _newton_to_disc(self, z):
        """Solve F(v) = z for v in the disc, vectorized and damped."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        hint = getattr(self, "_hint", None)
        F0, Fp0 = self._F_batch(np.array([self._w0]))
        v = self._w0 + (z - F0[0]) / Fp0[0]
        if hint is not None and z.size == 1:
            zh, vh, fph = hint
            v_pred = vh + (z - zh) / fph
            if abs(v_pred[0]) < 1.0:
                v = v_pred
        big = np.abs(v) > 0.9
        v[big] *= 0.9 / np.abs(v[big])
        Fv, Fpv = self._F_batch(v)
        res = np.abs(Fv - z)
        # tight target: downstream second differences of the Robin function
        # amplify any inversion slack by 1/h^2
        tol = 1e-13 * self.diameter()
        for _ in range(60):
            active = res > tol
            if not np.any(active):
                break
            va = v[active]
            step = (Fv[active] - z[active]) / Fpv[active]
            vnew = va - step
            # keep iterates inside the closed disc
            for _ in range(50):
                out = np.abs(vnew) >= 1.0 - 1e-12
                if not np.any(out):
                    break
                step = np.where(out, 0.5 * step, step)
                vnew = va - step
            Fn, Fpn = self._F_batch(vnew)
            rnew = np.abs(Fn - z[active])
            for _ in range(40):
                worse = rnew > res[active] * (1.0 - 1e-4) + 1e-16
                if not np.any(worse):
                    break
                step = np.where(worse, 0.5 * step, step)
                vnew = va - step
                Fn, Fpn = self._F_batch(vnew)
                rnew = np.abs(Fn - z[active])
            v[active] = vnew
            Fv[active] = Fn
            Fpv[active] = Fpn
            res[active] = rnew
        if np.any(res > 1e-9 * self.diameter()):
            raise ConvergenceError(
                "forward-map inversion stalled", residual=float(res.max())
            )
        if z.size == 1:
            self._hint = (z.copy(), v.copy(), Fpv[0])
        return v

    # -- public surface ------------------------------------------------------

    def phi(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        v = self._newton_to_disc(pts)
        return _restore(self._mobius(v), scalar)

    def phi_derivs(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        v = self._newton_to_disc(pts)
        u = self._mobius(v)
        f1, f2, f3 = self._F_triple(v)
        n1, n2, n3 = self._mobius_inv_derivs(u)
        g1 = f1 * n1
        g2 = f2 * n1 ** 2 + f1 * n2
        g3 = f3 * n1 ** 3 + 3.0 * f2 * n1 * n2 + f1 * n3
        d1, d2, d3 = _inverse_triple(g1, g2, g3)
        return _restore(d1, scalar), _restore(d2, scalar), _restore(d3, scalar)

    def phi_with_derivs(self, z):
        # one Newton solve shared between the value and the derivatives
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        v = self._newton_to_disc(pts)
        u = self._mobius(v)
        f1, f2, f3 = self._F_triple(v)
        n1, n2, n3 = self._mobius_inv_derivs(u)
        g1 = f1 * n1
        g2 = f2 * n1 ** 2 + f1 * n2
        g3 = f3 * n1 ** 3 + 3.0 * f2 * n1 * n2 + f1 * n3
        d1, d2, d3 = _inverse_triple(g1, g2, g3)
        return (
            _restore(u, scalar),
            _restore(d1, scalar),
            _restore(d2, scalar),
            _restore(d3, scalar),
        )

    def f_inverse(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        v = self._mobius_inv(pts)
        F, _ = self._F_batch(v)
        return _restore(F, scalar)

    def inverse_derivs(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        v = self._mobius_inv(pts)
        f1, f2, f3 = self._F_triple(v)
        n1, n2, n3 = self._mobius_inv_derivs(pts)
        g1 = f1 * n1
        g2 = f2 * n1 ** 2 + f1 * n2
        g3 = f3 * n1 ** 3 + 3.0 * f2 * n1 * n2 + f1 * n3
        return _restore(g1, scalar), _restore(g2, scalar), _restore(g3, scalar)

    def schwarzian_of_F(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        v = self._mobius_inv(pts)
        n1, _, _ = self._mobius_inv_derivs(pts)
        s = self._schwarzian_F_pre(v) * n1 ** 2
        return _restore(s, scalar)


class _SCBacked(_InverseDefined):
    """Inverse-defined map whose F comes from the prevertex product integral."""

    def __init__(self, spec: PolygonSpec):
        self.spec = spec

    def _F_batch(self, v):
        return _sc_core(self.spec, v, guard=1e-13)

    def _F_triple(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        _, f1 = _sc_core(self.spec, v, guard=1e-13)
        s1, s2 = _sc_pole_sums(self.spec, v)
        f2 = -f1 * s1
        f3 = f1 * (s1 ** 2 + s2)
        return f1, f2, f3

    def _schwarzian_F_pre(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        if np.any(np.min(np.abs(v[..., None] - self.spec.prevertices), axis=-1)
                  < PREVERTEX_GUARD):
            raise ProximityError("Schwarzian evaluation too close to a prevertex")
        s1, s2 = _sc_pole_sums(self.spec, v)
        return s2 - 0.5 * s1 ** 2


class RectangleMap(_SCBacked):
    """Axis-aligned rectangle of given aspect ratio, centred at the origin.

    The prevertex angle theta1 is recovered from the aspect ratio by
    bisection; the realized half-sides are K(cos theta1)/2 horizontally and
    K(sin theta1)/2 vertically.
    """

    domain_kind = "rectangle"

    def __init__(self, aspect: float):
        if not 0.0 < aspect <= 1.0:
            raise DomainError("aspect ratio must lie in (0, 1]")
        self.aspect = float(aspect)
        self.theta1 = self._solve_theta1(self.aspect)
        super().__init__(PolygonSpec.rectangle(self.theta1))
        ct, st = math.cos(self.theta1), math.sin(self.theta1)
        self.half_width = 0.5 * elliptic_K(ct)
        self.half_height = 0.5 * elliptic_K(st)

    @staticmethod
    def _solve_theta1(aspect: float) -> float:
        def g(theta):
            return elliptic_K(math.sin(theta)) / elliptic_K(math.cos(theta))

        lo, hi = 1e-12, 0.25 * math.pi
        if aspect >= 1.0:
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) < aspect:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        return 0.5 * (lo + hi)

    @property
    def xi0(self) -> complex:
        return 0.0 + 0.0j

    def diameter(self) -> float:
        return 2.0 * math.hypot(self.half_width, self.half_height)

    def boundary_length(self) -> float:
        return 4.0 * (self.half_width + self.half_height)

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        d = np.minimum(self.half_width - np.abs(pts.real),
                       self.half_height - np.abs(pts.imag))
        return _restore_real(d, scalar)


class RegularPolygonMap(_InverseDefined):
    """Regular m-gon centred at the origin with a vertex on the positive axis.

    F'(w) = (1 - w^m)^(-2/m) stays on the principal branch because
    Re(1 - w^m) > 0 throughout the disc; no argument tracking is needed.
    """

    domain_kind = "regular_polygon"

    def __init__(self, m: int):
        if int(m) != m or m < 3:
            raise DomainError("regular polygon needs an integer m >= 3")
        self.m = int(m)
        # vertex radius in closed form through the beta integral
        mm = float(self.m)
        self.vertex_radius = float(
            _gamma(1.0 / mm) * _gamma((mm - 2.0) / mm)
            / (mm * _gamma((mm - 1.0) / mm))
        )
        self.apothem = self.vertex_radius * math.cos(math.pi / mm)

    @property
    def xi0(self) -> complex:
        return 0.0 + 0.0j

    def diameter(self) -> float:
        if self.m % 2 == 0:
            return 2.0 * self.vertex_radius
        return 2.0 * self.vertex_radius * math.cos(math.pi / (2.0 * self.m))

    def boundary_length(self) -> float:
        return 2.0 * self.m * self.vertex_radius * math.sin(math.pi / self.m)

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        m = self.m
        normals = np.exp(-1j * (2.0 * np.arange(m) + 1.0) * np.pi / m)
        proj = np.real(pts[..., None] * normals)
        d = self.apothem - np.max(proj, axis=-1)
        return _restore_real(d, scalar)

    def _fp(self, v):
        # principal branch is safe: Re(1 - v^m) > 0 on the disc
        return np.exp((-2.0 / self.m) * np.log(1.0 - v ** self.m))

    def _F_batch(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        xi = v[:, None] * _PATH_T[None, :]
        vals = self._fp(xi)
        F = v * (vals[:, :-1] @ _PATH_W[:-1])
        return F, vals[:, -1]

    def _F_triple(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        m = self.m
        f1 = self._fp(v)
        q = 1.0 - v ** m
        r = 2.0 * v ** (m - 1) / q
        f2 = f1 * r
        rp = (2.0 * (m - 1) * v ** (m - 2) * q + 2.0 * m * v ** (2 * m - 2)) / q ** 2
        f3 = f1 * (r ** 2 + rp)
        return f1, f2, f3

    def _schwarzian_F_pre(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        m = self.m
        q = v ** m - 1.0
        if np.any(np.abs(q) < PREVERTEX_GUARD):
            raise ProximityError("Schwarzian evaluation too close to a vertex preimage")
        mu = 2.0 / m
        s1 = mu * m * v ** (m - 1) / q
        s2 = -mu * (m * (m - 1) * v ** (m - 2) * q - m * m * v ** (2 * m - 2)) / q ** 2
        return s2 - 0.5 * s1 ** 2


class SymPolygonMap(_SCBacked):
    """Polygon map built from explicit prevertex data.

    The zero of phi sits at the image of the in-disc point where the product
    integrand satisfies the interior critical-point equation; for centrally
    symmetric data that point is the origin and no solve is needed.
    """

    domain_kind = "sym_polygon"

    def __init__(self, spec: PolygonSpec):
        super().__init__(spec)
        self._w0 = self._solve_w0()
        _, fp = _sc_core(spec, np.array([self._w0]), guard=1e-13)
        self._sigma = float(np.angle(fp[0]))
        self._xi0 = complex(_sc_core(spec, np.array([self._w0]), guard=1e-13)[0][0])
        self.vertices = np.array(
            [_sc_vertex(spec, k) for k in range(spec.thetas.size)]
        )

    def _grakhov_pre(self, v):
        s1, _ = _sc_pole_sums(self.spec, np.atleast_1d(v))
        return -s1[0] - 2.0 * np.conj(v) / (1.0 - abs(v) ** 2)

    def _solve_w0(self) -> complex:
        v = 0.0 + 0.0j
        g = self._grakhov_pre(v)
        if abs(g) < 1e-12:
            return v
        for _ in range(80):
            if abs(g) < 1e-13:
                return v
            s1, s2 = _sc_pole_sums(self.spec, np.atleast_1d(v))
            gv = complex(s2[0]) - 2.0 * np.conj(v) ** 2 / (1.0 - abs(v) ** 2) ** 2
            gvb = -2.0 / (1.0 - abs(v) ** 2) ** 2
            A = np.array(
                [
                    [gv.real + gvb.real, gvb.imag - gv.imag],
                    [gv.imag + gvb.imag, gv.real - gvb.real],
                ]
            )
            rhs = np.array([-g.real, -g.imag])
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError("critical-point system is singular") from exc
            delta = complex(sol[0], sol[1])
            for _ in range(40):
                vn = v + delta
                if abs(vn) < 1.0 - 1e-9 and abs(self._grakhov_pre(vn)) < abs(g):
                    break
                delta *= 0.5
            v = v + delta
            g = self._grakhov_pre(v)
        raise ConvergenceError("critical-point iteration stalled", residual=abs(g))

    @property
    def xi0(self) -> complex:
        return self._xi0

    def diameter(self) -> float:
        vs = self.vertices
        return float(np.max(np.abs(vs[:, None] - vs[None, :])))

    def boundary_length(self) -> float:
        return float(np.sum(np.abs(np.roll(self.vertices, -1) - self.vertices)))

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        vs = self.vertices
        nxt = np.roll(vs, -1)
        flat = pts.ravel()
        dmin = np.full(flat.shape, np.inf)
        winding = np.zeros(flat.shape)
        for a, b in zip(vs, nxt):
            seg = b - a
            t = np.clip(np.real(np.conj(seg) * (flat - a)) / abs(seg) ** 2, 0.0, 1.0)
            dmin = np.minimum(dmin, np.abs(a + t * seg - flat))
            winding += np.angle((b - flat) / (a - flat))
        inside = np.abs(winding) > np.pi  # 2*pi inside, 0 outside
        d = np.where(inside, dmin, -dmin).reshape(pts.shape)
        return _restore_real(d, scalar)


# ---------------------------------------------------------------------------
# circular sector
# ---------------------------------------------------------------------------

class SectorMap(ConformalMap):
    """Unit-disc sector of opening pi/m, 0 < arg z < pi/m, m >= 1.

    Composition of z^m (sector to half disc), the rational half-disc-to-disc
    map, and a real Mobius factor; everything is in closed form including the
    inverse, so no iteration appears anywhere.
    """

    domain_kind = "disc_sector"

    def __init__(self, m: int):
        if int(m) != m or m < 1:
            raise DomainError("sector order must be an integer m >= 1")
        self.m = int(m)
        mm = float(self.m)
        self.t_m = (2.0 * mm + math.sqrt(4.0 * mm * mm + 1.0)) ** (-1.0 / (2.0 * mm))
        t = self.t_m
        self.a_m = (1.0 - 2.0 * t ** self.m - t ** (2 * self.m)) / (
            1.0 + 2.0 * t ** self.m - t ** (2 * self.m)
        )
        self.theta_m = math.pi / (2.0 * mm) - math.pi
        self.alpha_m = (
            4.0 * mm * t ** (self.m - 1) * (1.0 + t ** (2 * self.m))
            / (1.0 + 2.0 * t ** self.m - t ** (2 * self.m)) ** 2
        )
        self._xi0 = t * np.exp(1j * math.pi / (2.0 * mm))

    @property
    def xi0(self) -> complex:
        return complex(self._xi0)

    def diameter(self) -> float:
        return max(1.0, 2.0 * math.sin(math.pi / (2.0 * self.m)))

    def boundary_length(self) -> float:
        return 2.0 + math.pi / self.m

    def boundary_distance(self, z):
        pts, scalar = _as_points(z)
        r = np.abs(pts)
        ang = np.angle(pts)
        d = np.minimum.reduce(
            [1.0 - r, r * np.sin(ang), r * np.sin(np.pi / self.m - ang)]
        )
        return _restore_real(d, scalar)

    @staticmethod
    def _half_disc_derivs(y):
        """Rational half-disc-to-disc map with first three derivatives."""
        D = y * y - 2j * y + 1.0
        val = (y * y + 2j * y + 1.0) / D
        d1 = -4j * (y * y - 1.0) / D ** 2
        d2 = 8j * (y ** 3 - 3.0 * y + 2j) / D ** 3
        d3 = -24j * (y ** 4 - 6.0 * y * y + 8j * y + 5.0) / D ** 4
        return val, d1, d2, d3

    def _mobius_derivs(self, v):
        a = self.a_m
        e = np.exp(1j * self.theta_m)
        den = 1.0 - a * v
        val = e * (v - a) / den
        d1 = e * (1.0 - a * a) / den ** 2
        d2 = 2.0 * a * e * (1.0 - a * a) / den ** 3
        d3 = 6.0 * a * a * e * (1.0 - a * a) / den ** 4
        return val, d1, d2, d3

    def phi(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        y = pts ** self.m
        v, _, _, _ = self._half_disc_derivs(y)
        u, _, _, _ = self._mobius_derivs(v)
        return _restore(u, scalar)

    def phi_derivs(self, z):
        pts, scalar = _as_points(z)
        self._require_interior(pts)
        m = self.m
        y = pts ** m
        g1 = m * pts ** (m - 1)
        g2 = m * (m - 1) * pts ** (m - 2) if m >= 2 else np.zeros_like(pts)
        g3 = m * (m - 1) * (m - 2) * pts ** (m - 3) if m >= 3 else np.zeros_like(pts)
        v, p1, p2, p3 = self._half_disc_derivs(y)
        A1 = p1 * g1
        A2 = p2 * g1 ** 2 + p1 * g2
        A3 = p3 * g1 ** 3 + 3.0 * p2 * g1 * g2 + p1 * g3
        _, t1, t2, t3 = self._mobius_derivs(v)
        d1 = t1 * A1
        d2 = t2 * A1 ** 2 + t1 * A2
        d3 = t3 * A1 ** 3 + 3.0 * t2 * A1 * A2 + t1 * A3
        return _restore(d1, scalar), _restore(d2, scalar), _restore(d3, scalar)

    def f_inverse(self, w):
        pts, scalar = _as_points(w)
        self._require_in_disc(pts)
        a = self.a_m
        e = np.exp(-1j * self.theta_m)
        v = (a + e * pts) / (1.0 + a * e * pts)
        g = (1.0 + v) / (1.0 - v)
        # y = i(sqrt(g^2+1) - g), rationalized to avoid cancellation
        y = 1j / (np.sqrt(g * g + 1.0) + g)
        z = np.exp(np.log(y) / self.m)
        return _restore(z, scalar)


# ---------------------------------------------------------------------------
# free-function facade and factory
# ---------------------------------------------------------------------------

def phi(conformal_map: ConformalMap, z):
    """Forward map value(s); see ConformalMap.phi."""
    return conformal_map.phi(z)


def phi_derivs(conformal_map: ConformalMap, z):
    """Forward map derivative triple; see ConformalMap.phi_derivs."""
    return conformal_map.phi_derivs(z)


def f_inverse(conformal_map: ConformalMap, w):
    """Inverse map value(s); see ConformalMap.f_inverse."""
    return conformal_map.f_inverse(w)


def schwarzian_of_F(conformal_map: ConformalMap, w):
    """Schwarzian derivative of the inverse map at disc points."""
    return conformal_map.schwarzian_of_F(w)


@lru_cache(maxsize=64)
def _sector_cache(m: int) -> SectorMap:
    return SectorMap(m)


def sector_map(m: int, z):
    """Closed-form disc image of a point of the sector 0 < arg z < pi/m."""
    return _sector_cache(int(m)).phi(z)


def make_map(kind: str, **params) -> ConformalMap:
    """Construct a map by family name.

    kind is one of disc, ellipse (a), rectangle (aspect), regular_polygon (m),
    sym_polygon (spec or thetas/mus[/alpha/beta]), disc_sector (m).
    """
    kind = kind.strip().lower()
    if kind == "disc":
        return DiscMap()
    if kind == "ellipse":
        return EllipseMap(float(params["a"]))
    if kind == "rectangle":
        return RectangleMap(float(params["aspect"]))
    if kind == "regular_polygon":
        return RegularPolygonMap(int(params["m"]))
    if kind == "sym_polygon":
        spec = params.get("spec")
        if spec is None:
            spec = PolygonSpec(
                np.asarray(params["thetas"], dtype=float),
                np.asarray(params["mus"], dtype=float),
                complex(params.get("alpha", 1.0)),
                complex(params.get("beta", 0.0)),
            )
        return SymPolygonMap(spec)
    if kind == "disc_sector":
        return SectorMap(int(params["m"]))
    raise DomainError("unknown domain kind: %r" % kind)
