"""Arithmetic-geometric mean, complete elliptic integrals, Jacobi functions,
and Gauss-Legendre quadrature rules.

The Jacobi functions accept complex arguments; they are evaluated by a
descending Landen transformation seeded from the trigonometric limit, which
keeps the recursion stable for every modulus in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SingularityError

__all__ = [
    "agm",
    "elliptic_K",
    "EllipticModulus",
    "jacobi_sn_cn_dn",
    "QuadratureRule",
    "gauss_legendre",
]

_LANDEN_TOL = 1e-16


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two positive numbers."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError("agm requires positive arguments")
    for _ in range(64):
        if abs(a - b) <= 1e-17 * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_K(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus convention.

    Parameters
    ----------
    k : float
        Modulus, 0 <= k < 1.

    Returns
    -------
    float
        K(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{-1/2} dt, computed as
        pi / (2 * agm(1, k')) with k' = sqrt(1 - k^2).
    """
    if not 0.0 <= k < 1.0:
        raise DomainError(f"elliptic_K requires 0 <= k < 1, got {k}")
    kprime = math.sqrt((1.0 - k) * (1.0 + k))
    return math.pi / (2.0 * agm(1.0, kprime))


@dataclass(frozen=True)
class EllipticModulus:
    """Modulus k with its complement and both quarter periods."""

    k: float
    kprime: float
    K: float
    Kprime: float

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        if not 0.0 < k < 1.0:
            raise DomainError(f"modulus must lie in (0, 1), got {k}")
        return _modulus_from_k(float(k))

    @property
    def nome_ratio(self) -> float:
        """Kprime / K, strictly decreasing in k."""
        return self.Kprime / self.K


@lru_cache(maxsize=64)
def _modulus_from_k(k: float) -> "EllipticModulus":
    kprime = math.sqrt((1.0 - k) * (1.0 + k))
    return EllipticModulus(
        k=k, kprime=kprime, K=elliptic_K(k), Kprime=elliptic_K(kprime)
    )


@lru_cache(maxsize=64)
def _landen_moduli(k: float) -> tuple[float, ...]:
    """Descending sequence k = k_0 > k_1 > ... down to ~1e-16."""
    ks = [k]
    while ks[-1] > _LANDEN_TOL:
        kc = math.sqrt((1.0 - ks[-1]) * (1.0 + ks[-1]))
        ks.append(ks[-1] ** 2 / (1.0 + kc) ** 2)
    return tuple(ks)


def jacobi_sn_cn_dn(u, k: float):
    """Jacobi elliptic sn, cn, dn for complex argument.

    Parameters
    ----------
    u : complex or ndarray
        Argument; poles of sn at i K' mod (2K, 2i K') are guarded.
    k : float
        Modulus in [0, 1).

    Returns
    -------
    (sn, cn, dn) : complex ndarrays (scalars for scalar input)

    Notes
    -----
    Uses the descending Landen recursion: with k1 = k^2 / (1 + k')^2 and
    v = u / (1 + k1),

        sn(u,k) = (1 + k1) s / (1 + k1 s^2),
        cn(u,k) = c d / (1 + k1 s^2),
        dn(u,k) = (1 - k1 s^2) / (1 + k1 s^2),

    where (s, c, d) are the functions at (v, k1).  At the bottom of the
    recursion sn = sin, cn = cos, dn = 1.
    """
    if not 0.0 <= k < 1.0:
        raise DomainError(f"jacobi modulus must lie in [0, 1), got {k}")
    u_arr = np.asarray(u, dtype=complex)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)

    if k > 0.0:
        mod = EllipticModulus.from_k(k)
        guard = 1e-8 * math.hypot(2.0 * mod.K, 2.0 * mod.Kprime)
        d = u_arr - 1j * mod.Kprime
        d = d - 2.0 * mod.K * np.round(d.real / (2.0 * mod.K))
        d = d - 2j * mod.Kprime * np.round(d.imag / (2.0 * mod.Kprime))
        if np.any(np.abs(d) < guard):
            raise SingularityError("argument within pole guard of sn")

    ks = _landen_moduli(k)
    scale = 1.0
    for ki in ks[1:]:
        scale *= 1.0 + ki
    v = u_arr / scale
    s, c, d = np.sin(v), np.cos(v), np.ones_like(v)
    for ki in reversed(ks[1:]):
        denom = 1.0 + ki * s * s
        s, c, d = (1.0 + ki) * s / denom, c * d / denom, (1.0 - ki * s * s) / denom
    if scalar:
        return complex(s[0]), complex(c[0]), complex(d[0])
    return s, c, d


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on the open interval (-1, 1)."""

    nodes: np.ndarray
    weights: np.ndarray

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Affine image of the rule on (a, b)."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights

    def integrate(self, f, a: float = -1.0, b: float = 1.0):
        x, w = self.mapped(a, b)
        return np.sum(w * f(x))


def gauss_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre rule with n nodes, 1 <= n <= 512."""
    if not 1 <= n <= 512:
        raise DomainError(f"gauss_legendre supports 1 <= n <= 512, got {n}")
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(nodes=nodes, weights=weights)
