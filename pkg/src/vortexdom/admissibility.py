"""Closed-form nondegeneracy criteria and excluded-parameter sets per family.

The scalar that decides everything here is s = |F'''(0)/F'(0)|, the absolute
Schwarzian of the inverse map at the disc origin (the normalization point sits
at the Robin critical point, where F''(0) enters no invariant quantity).  A
domain is degenerate when s lands on one of the forbidden values

    2*sqrt(1 - 1/n^2),   n = 1, 2, ...,  together with the limit point 2.

Family-specific parametrizations of the same condition: the ellipse through
the strictly increasing modulus function ``ellipse_g``, the rectangle through
the aspect-ratio sequence ``rectangle_excluded_ratios``, and centrally
symmetric polygons through the prevertex sum ``sym_polygon_sum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import ConformalMap, PolygonSpec
from .errors import AccuracyError, DomainError
from .specialfn import elliptic_K

__all__ = [
    "AdmissibilityReport",
    "RatioCheck",
    "corollary_check",
    "ellipse_excluded_ratios",
    "ellipse_g",
    "forbidden_set_distance",
    "forbidden_value",
    "rectangle_check",
    "rectangle_excluded_ratios",
    "sym_polygon_check",
    "sym_polygon_sum",
]

DEFAULT_TOLERANCE = 1e-8


def forbidden_value(n) -> float:
    """The n-th forbidden Schwarzian magnitude 2*sqrt(1 - 1/n^2); n may be inf."""
    if n == math.inf:
        return 2.0
    n = int(n)
    if n < 1:
        raise DomainError("forbidden-set index must satisfy n >= 1")
    return 2.0 * math.sqrt(1.0 - 1.0 / (n * n))


def forbidden_set_distance(s: float) -> tuple[float, float]:
    """Distance from ``s`` to the forbidden set, with the attaining index.

    Parameters
    ----------
    s : float
        Nonnegative Schwarzian magnitude.

    Returns
    -------
    distance : float
        min over n in {1, 2, ...} union {inf} of ``|s - forbidden_value(n)|``.
    nearest : float
        The minimizing index; ``math.inf`` marks the accumulation point 2.
        Ties resolve to the smallest finite index.
    """
    s = abs(float(s))
    # the values increase to 2, so the nearest finite index is a neighbor of
    # the continuous inverse n(s) = 2 / sqrt(4 - s^2)
    cands = {1}
    if s < 2.0:
        n_star = 2.0 / math.sqrt((2.0 - s) * (2.0 + s))
        if n_star < 1e9:
            lo = max(1, math.floor(n_star))
            cands.update((lo, lo + 1))
    best_d, best_n = abs(s - 2.0), math.inf
    for n in sorted(cands):
        d = abs(s - forbidden_value(n))
        if d < best_d:
            best_d, best_n = d, float(n)
    return best_d, best_n


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    if isinstance(v, (tuple, list, np.ndarray)):
        return " ".join("%.17g" % float(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Verdict of the forbidden-set test for one domain.

    Attributes
    ----------
    schwarzian_abs : float
        |F'''(0)/F'(0)| at the critical point.
    forbidden_set_distance : float
        Distance to the nearest forbidden value, accumulation point included.
    nearest_n : float
        Index attaining the distance; ``math.inf`` means the limit value 2.
    verdict : bool
        True exactly when the distance exceeds ``tolerance``.
    tolerance : float
        Membership tolerance the verdict was taken against.
    params : dict
        Echo of the domain parameters the test was run on.
    """

    schwarzian_abs: float
    forbidden_set_distance: float
    nearest_n: float
    verdict: bool
    tolerance: float
    params: dict

    @property
    def hits_n1(self) -> bool:
        """True when the failure is the degenerate n=1 hit (vanishing Schwarzian)."""
        return (not self.verdict) and self.nearest_n == 1

    def as_text(self) -> str:
        lines = []
        for key, val in self.params.items():
            lines.append("%s = %s" % (key, _format_value(val)))
        lines.append("schwarzian_abs = %s" % _format_value(self.schwarzian_abs))
        lines.append(
            "forbidden_set_distance = %s" % _format_value(self.forbidden_set_distance)
        )
        lines.append("nearest_n = %s" % ("inf" if math.isinf(self.nearest_n)
                                         else "%d" % int(self.nearest_n)))
        lines.append("tolerance = %s" % _format_value(self.tolerance))
        lines.append("verdict = %s" % _format_value(self.verdict))
        lines.append("n1_hit = %s" % _format_value(self.hits_n1))
        return "\n".join(lines)


def _report(s_abs: float, tolerance: float, params: dict) -> AdmissibilityReport:
    dist, nearest = forbidden_set_distance(s_abs)
    return AdmissibilityReport(
        schwarzian_abs=float(s_abs),
        forbidden_set_distance=float(dist),
        nearest_n=nearest,
        verdict=bool(dist > tolerance),
        tolerance=float(tolerance),
        params=params,
    )


def _domain_params(conformal_map: ConformalMap) -> dict:
    params = {"kind": conformal_map.domain_kind}
    for name in ("a", "k", "aspect", "theta1", "m"):
        val = getattr(conformal_map, name, None)
        if val is not None:
            params[name] = val
    spec = getattr(conformal_map, "spec", None)
    if spec is not None:
        params["thetas"] = tuple(float(t) for t in spec.thetas)
        params["mus"] = tuple(float(t) for t in spec.mus)
    return params


def corollary_check(
    conformal_map: ConformalMap, tolerance: float = DEFAULT_TOLERANCE
) -> AdmissibilityReport:
    """Test a domain against the forbidden Schwarzian set.

    Parameters
    ----------
    conformal_map : ConformalMap
        Map normalized at its critical point: phi(xi0) = 0 with
        phi''(xi0) = 0, so that the inverse-map Schwarzian at the origin
        reduces to F'''(0)/F'(0).
    tolerance : float
        Absolute membership tolerance, default 1e-8.

    Returns
    -------
    AdmissibilityReport
        Verdict is True when |F'''(0)/F'(0)| stays clear of every value
        2*sqrt(1 - 1/n^2) and of the limit point 2.

    Raises
    ------
    DomainError
        If the map is not normalized at a critical point.
    """
    xi0 = conformal_map.xi0
    w0 = complex(np.asarray(conformal_map.phi(xi0)).item())
    d1, d2, _ = (complex(np.asarray(t).item())
                 for t in conformal_map.phi_derivs(xi0))
    if abs(w0) > 1e-8:
        raise DomainError(
            "map is not normalized: |phi(xi0)| = %.3e, expected 0" % abs(w0)
        )
    if abs(d2) * conformal_map.diameter() > 1e-6 * abs(d1):
        raise DomainError(
            "xi0 is not a critical point: phi''(xi0) does not vanish"
        )
    s_abs = abs(complex(np.asarray(conformal_map.schwarzian_of_F(0.0 + 0.0j)).item()))
    return _report(s_abs, tolerance, _domain_params(conformal_map))


# ---------------------------------------------------------------------------
# ellipse family
# ---------------------------------------------------------------------------

def ellipse_g(k: float) -> float:
    """Strictly increasing modulus function deciding ellipse degeneracy.

    Parameters
    ----------
    k : float
        Elliptic modulus in [0, 1).

    Returns
    -------
    float
        g(k) = (1 - h(k)^2)^(-1/2) with
        h(k) = ((1 + k^2) - (pi / (2 K(k)))^2) / (2 k), continued by its
        limit g(0) = 1.  An ellipse of modulus k is degenerate exactly when
        g(k) is an integer.

    Raises
    ------
    DomainError
        If k falls outside [0, 1) or the outer root argument is not positive
        (the latter cannot happen for a true modulus; flagged defensively).
    """
    k = float(k)
    if not 0.0 <= k < 1.0:
        raise DomainError("ellipse modulus must lie in [0, 1)")
    if k == 0.0:
        # series limit: h(k) = (3/4) k + O(k^3), so g -> 1
        return 1.0
    half_pi_over_K = math.pi / (2.0 * elliptic_K(k))
    h = ((1.0 + k * k) - half_pi_over_K ** 2) / (2.0 * k)
    arg = (1.0 - h) * (1.0 + h)
    if arg <= 0.0:
        raise DomainError("outer root argument %.3e is not positive" % arg)
    return 1.0 / math.sqrt(arg)


def _axis_ratio_from_G(G: float) -> float:
    """Major semi-axis of the foci +-1 ellipse whose modulus ratio K'/K is G.

    The boundary x^2/a^2 + y^2/(a^2 - 1) = 1 corresponds to
    G = (4/pi) asinh(1/sqrt(a^2 - 1)), which inverts to a = coth(pi G / 4).
    """
    return 1.0 / math.tanh(0.25 * math.pi * G)


def ellipse_excluded_ratios(n_max: int) -> list[tuple[int, float, float]]:
    """Excluded ellipse parameters (n, k_n, a_n) for n = 1 .. n_max.

    k_n is the unique modulus with g(k_n) = n (bisection, interval below
    1e-12); a_n > 1 is the matching major semi-axis of the ellipse with foci
    at -1 and 1.  The degenerate first entry is (1, 0.0, 1.0), the circle.

    Raises
    ------
    AccuracyError
        When k_n is no longer resolvable in double precision; the moduli
        pile up against 1 like 1 - k_n ~ 8 exp(-pi n), which exhausts the
        representable range near n = 12.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    out: list[tuple[int, float, float]] = [(1, 0.0, 1.0)]
    hi_cap = 1.0 - 1e-15
    for n in range(2, n_max + 1):
        lo, hi = 0.0, hi_cap
        if ellipse_g(hi) < n:
            raise AccuracyError(
                "g(k) cannot reach %d on double-precision moduli below 1" % n
            )
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if ellipse_g(mid) < n:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        k_n = 0.5 * (lo + hi)
        kprime = math.sqrt((1.0 - k_n) * (1.0 + k_n))
        G = elliptic_K(kprime) / elliptic_K(k_n)
        out.append((n, k_n, _axis_ratio_from_G(G)))
    return out


# ---------------------------------------------------------------------------
# rectangle family
# ---------------------------------------------------------------------------

def rectangle_excluded_ratios(n_max: int) -> list[float]:
    """Excluded rectangle aspect ratios G_1 >= G_2 >= ... in (0, 1].

    G_n = K(x_n') / K(x_n) at x_n = sqrt((1 + sqrt(1 - 1/n^2)) / 2); the
    first value is exactly 1 (the square).
    """
    n_max = int(n_max)
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    out = []
    for n in range(1, n_max + 1):
        s = math.sqrt(1.0 - 1.0 / (n * n))
        # complementary modulus from the half-angle form, no cancellation
        x = math.sqrt(0.5 * (1.0 + s))
        xc = math.sqrt(0.5 * (1.0 - s))
        out.append(elliptic_K(xc) / elliptic_K(x))
    return out


@dataclass(frozen=True)
class RatioCheck:
    """Distance of one aspect ratio from the excluded sequence."""

    value: float
    forbidden_set_distance: float
    nearest_n: int
    verdict: bool
    tolerance: float

    def as_text(self) -> str:
        return "\n".join([
            "value = %s" % _format_value(self.value),
            "forbidden_set_distance = %s" % _format_value(self.forbidden_set_distance),
            "nearest_n = %d" % self.nearest_n,
            "tolerance = %s" % _format_value(self.tolerance),
            "verdict = %s" % _format_value(self.verdict),
        ])


def rectangle_check(
    ratio: float, n_max: int = 50, tolerance: float = DEFAULT_TOLERANCE
) -> RatioCheck:
    """Test a rectangle aspect ratio against the first n_max excluded values."""
    ratio = float(ratio)
    if not 0.0 < ratio <= 1.0:
        raise DomainError("aspect ratio must lie in (0, 1]")
    seq = rectangle_excluded_ratios(n_max)
    dists = [abs(ratio - g) for g in seq]
    idx = int(np.argmin(dists))
    return RatioCheck(
        value=ratio,
        forbidden_set_distance=dists[idx],
        nearest_n=idx + 1,
        verdict=bool(dists[idx] > tolerance),
        tolerance=float(tolerance),
    )


# ---------------------------------------------------------------------------
# centrally symmetric polygons
# ---------------------------------------------------------------------------

def sym_polygon_sum(spec: PolygonSpec) -> float:
    """Prevertex sum sum_k mu_k cos(2 theta_k) over one symmetric half.

    The spec must be centrally symmetric: an even number of prevertices with
    theta_{k+m} = theta_k + pi and equal angle fractions.  The inverse-map
    Schwarzian of the polygon at the origin equals twice this sum.

    Raises
    ------
    DomainError
        If the spec is not centrally symmetric.
    """
    th = np.asarray(spec.thetas, dtype=float)
    mu = np.asarray(spec.mus, dtype=float)
    if th.size % 2:
        raise DomainError("centrally symmetric spec needs an even prevertex count")
    m = th.size // 2
    # sorted angles put every antipode exactly m slots later
    if (np.any(np.abs(th[m:] - th[:m] - np.pi) > 1e-12)
            or np.any(np.abs(mu[m:] - mu[:m]) > 1e-12)):
        raise DomainError(
            "spec is not centrally symmetric: need theta_{k+m} = theta_k + pi "
            "with matching angle fractions"
        )
    return float(np.sum(mu[:m] * np.cos(2.0 * th[:m])))


def sym_polygon_check(
    spec: PolygonSpec, tolerance: float = DEFAULT_TOLERANCE
) -> AdmissibilityReport:
    """Forbidden-set verdict for a centrally symmetric polygon spec.

    Uses the closed-form Schwarzian magnitude 2*|sym_polygon_sum(spec)|, so
    no map construction or quadrature is involved.
    """
    total = sym_polygon_sum(spec)
    params = {
        "kind": "sym_polygon",
        "thetas": tuple(float(t) for t in spec.thetas),
        "mus": tuple(float(t) for t in spec.mus),
        "half_sum": total,
    }
    return _report(2.0 * abs(total), tolerance, params)
