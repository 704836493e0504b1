"""Forbidden-set criteria: corollary checks, excluded sequences, polygon sums."""

import math

import numpy as np
import pytest

from vortexdom.admissibility import (
    corollary_check,
    ellipse_excluded_ratios,
    ellipse_g,
    forbidden_set_distance,
    forbidden_value,
    rectangle_check,
    rectangle_excluded_ratios,
    sym_polygon_check,
    sym_polygon_sum,
)
from vortexdom.conformal import (
    DiscMap,
    EllipseMap,
    PolygonSpec,
    RectangleMap,
    RegularPolygonMap,
    SectorMap,
    schwarzian_of_F,
)
from vortexdom.errors import AccuracyError, DomainError

from _oracles import fd_schwarzian, series_K, series_K_tail_bound


def sector_schwarzian_squared(m: int) -> float:
    """Closed-form |F'''(0)/F'(0)|^2 for the pi/m sector of the unit disc.

    The 16 m^2 term is pinned to the map numerics below at machine accuracy
    for m = 1..4; see test_sector_closed_form_matches_map.
    """
    root = math.sqrt(4.0 * m * m + 1.0)
    a = (-8.0 / m ** 8) * (2.0 * m ** 6 + 9.0 * m ** 4 + 6.0 * m ** 2 + 1.0)
    b = (4.0 / m ** 8) * (m ** 8 + 24.0 * m ** 6 + 38.0 * m ** 4 + 16.0 * m ** 2 + 2.0)
    return a * root + b


# frozen from the closed form above (12+ digits, double checked by the maps)
SECTOR_S2 = {
    1: 2.00621124003028,
    2: 0.263675912236089,
    3: 0.00359263169808699,
    4: 0.18426558499432,
}


# ---------------------------------------------------------------------------
# forbidden set
# ---------------------------------------------------------------------------

def test_forbidden_values_increase_to_two():
    vals = [forbidden_value(n) for n in range(1, 201)]
    assert vals[0] == 0.0
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v < 2.0 for v in vals)
    assert forbidden_value(math.inf) == 2.0


def test_forbidden_value_validates():
    with pytest.raises(DomainError):
        forbidden_value(0)


def test_forbidden_distance_exact_hits():
    d, n = forbidden_set_distance(0.0)
    assert d == 0.0 and n == 1
    d, n = forbidden_set_distance(math.sqrt(3.0))
    assert d < 1e-15 and n == 2
    d, n = forbidden_set_distance(2.0)
    assert d == 0.0 and math.isinf(n)
    d, n = forbidden_set_distance(2.5)
    assert d == 0.5 and math.isinf(n)


def test_forbidden_distance_near_accumulation():
    # just below 2 a large finite index wins over the limit point
    d, n = forbidden_set_distance(2.0 - 1e-12)
    assert d <= 1e-12
    assert math.isfinite(n) and n > 100


def test_forbidden_distance_brute_force():
    grid = np.array([forbidden_value(n) for n in range(1, 4001)] + [2.0])
    rng = np.random.default_rng(31)
    for s in rng.uniform(0.0, 1.95, 200):
        d, n = forbidden_set_distance(s)
        assert abs(d - np.min(np.abs(grid - s))) < 1e-15
        # the reported index attains the reported distance
        assert abs(abs(s - forbidden_value(n)) - d) < 1e-15


# ---------------------------------------------------------------------------
# corollary check per family
# ---------------------------------------------------------------------------

def test_disc_hits_n1():
    report = corollary_check(DiscMap())
    assert report.schwarzian_abs < 1e-13
    assert report.forbidden_set_distance < 1e-12
    assert report.nearest_n == 1
    assert report.verdict is False
    assert report.hits_n1
    assert report.params["kind"] == "disc"


@pytest.mark.parametrize("m", [3, 5, 8])
def test_regular_polygons_hit_n1(m):
    report = corollary_check(RegularPolygonMap(m))
    assert report.schwarzian_abs < 1e-12
    assert report.forbidden_set_distance < 1e-12
    assert report.verdict is False
    assert report.hits_n1
    assert report.params["m"] == m


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_sector_closed_form_matches_map(m):
    report = corollary_check(SectorMap(m))
    assert abs(report.schwarzian_abs ** 2 - SECTOR_S2[m]) < 1e-12
    assert abs(sector_schwarzian_squared(m) - SECTOR_S2[m]) < 1e-13
    assert report.verdict is True
    assert report.params["kind"] == "disc_sector"


def test_sector_nearest_indices():
    assert corollary_check(SectorMap(1)).nearest_n == 2
    assert corollary_check(SectorMap(2)).nearest_n == 1
    assert abs(corollary_check(SectorMap(2)).forbidden_set_distance
               - math.sqrt(SECTOR_S2[2])) < 1e-12


def test_sector_fd_oracle():
    # second-order finite differences of the inverse map, sharing no code
    # with the analytic derivative path
    smap = SectorMap(2)
    fd = fd_schwarzian(smap.f_inverse, 0j, h=1e-3)
    assert abs(abs(fd) - math.sqrt(SECTOR_S2[2])) < 1e-6


def test_non_normalized_map_rejected():
    class Shifted(DiscMap):
        @property
        def xi0(self):
            return 0.3 + 0.0j

    with pytest.raises(DomainError):
        corollary_check(Shifted())


def test_non_critical_point_rejected():
    c = 0.25

    class OffCritical(DiscMap):
        # disc automorphism vanishing at c, where phi'' does not vanish
        @property
        def xi0(self):
            return c + 0.0j

        def phi(self, z):
            z = np.asarray(z, dtype=complex)
            return (z - c) / (1.0 - c * z)

        def phi_derivs(self, z):
            z = np.asarray(z, dtype=complex)
            den = 1.0 - c * z
            s = 1.0 - c * c
            return s / den ** 2, 2.0 * c * s / den ** 3, 6.0 * c * c * s / den ** 4

    with pytest.raises(DomainError):
        corollary_check(OffCritical())


# ---------------------------------------------------------------------------
# ellipse family
# ---------------------------------------------------------------------------

def test_ellipse_g_endpoints():
    assert ellipse_g(0.0) == 1.0
    assert abs(ellipse_g(0.999) - 2.90529103879656) < 1e-12
    # logarithmic divergence toward k = 1
    assert ellipse_g(1.0 - 1e-12) > 9.0
    with pytest.raises(DomainError):
        ellipse_g(-0.1)
    with pytest.raises(DomainError):
        ellipse_g(1.0)


def test_ellipse_g_strictly_increasing():
    vals = [ellipse_g(k) for k in np.linspace(0.0, 0.99, 100)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_ellipse_g_series_oracle():
    rng = np.random.default_rng(7)
    for k in rng.uniform(0.02, 0.9, 50):
        K = series_K(k, 600)
        assert series_K_tail_bound(k, 600) < 1e-13
        h = ((1.0 + k * k) - (math.pi / (2.0 * K)) ** 2) / (2.0 * k)
        g_oracle = 1.0 / math.sqrt((1.0 - h) * (1.0 + h))
        assert abs(ellipse_g(float(k)) - g_oracle) < 1e-12


def test_ellipse_excluded_sequence():
    rows = ellipse_excluded_ratios(6)
    assert rows[0] == (1, 0.0, 1.0)
    assert abs(rows[1][1] - 0.98159517506967076) < 1e-13
    assert abs(rows[1][2] - 2.592309338920046) < 1e-12
    assert abs(rows[2][2] - 3.8528284087996867) < 1e-12
    for n, k_n, a_n in rows[1:]:
        assert abs(ellipse_g(k_n) - n) < 1e-8
        assert a_n > 1.0
    ks = [r[1] for r in rows]
    As = [r[2] for r in rows]
    assert all(b > a for a, b in zip(ks, ks[1:]))
    assert all(b > a for a, b in zip(As, As[1:]))


@pytest.mark.parametrize("n", [2, 3])
def test_ellipse_excluded_cross_inversion(n):
    # the map solves a -> k independently of g; both paths must agree, and
    # the resulting Schwarzian must land on the n-th forbidden value
    _, k_n, a_n = ellipse_excluded_ratios(n)[n - 1]
    emap = EllipseMap(a_n)
    assert abs(emap.k - k_n) < 1e-10
    report = corollary_check(emap)
    assert abs(report.schwarzian_abs - forbidden_value(n)) < 1e-8
    assert report.verdict is False
    assert report.nearest_n == n


def test_ellipse_excluded_resolution_cap():
    rows = ellipse_excluded_ratios(11)
    assert len(rows) == 11
    with pytest.raises(AccuracyError):
        ellipse_excluded_ratios(20)
    with pytest.raises(DomainError):
        ellipse_excluded_ratios(0)


# ---------------------------------------------------------------------------
# rectangle family
# ---------------------------------------------------------------------------

def test_rectangle_sequence():
    seq = rectangle_excluded_ratios(10)
    assert seq[0] == 1.0
    assert all(b < a for a, b in zip(seq, seq[1:]))
    assert all(0.0 < g <= 1.0 for g in seq)
    # the second value is the classical singular ratio 1/sqrt(3)
    assert abs(seq[1] - 1.0 / math.sqrt(3.0)) < 1e-14
    with pytest.raises(DomainError):
        rectangle_excluded_ratios(0)


def test_rectangle_check_examples():
    seq = rectangle_excluded_ratios(50)
    check = rectangle_check(0.6, 50)
    assert check.verdict is True
    assert check.nearest_n == 2
    assert abs(check.forbidden_set_distance - abs(0.6 - seq[1])) < 1e-15
    hit = rectangle_check(seq[3], 50)
    assert hit.verdict is False
    assert hit.nearest_n == 4
    with pytest.raises(DomainError):
        rectangle_check(0.0)
    with pytest.raises(DomainError):
        rectangle_check(1.2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_rectangle_excluded_ratio_fails_corollary(n):
    ratio = rectangle_excluded_ratios(n)[n - 1]
    report = corollary_check(RectangleMap(ratio))
    assert report.verdict is False
    assert report.nearest_n == n
    assert report.forbidden_set_distance < 1e-8


@pytest.mark.parametrize("n", [1, 2])
def test_rectangle_midway_ratio_passes(n):
    seq = rectangle_excluded_ratios(n + 1)
    report = corollary_check(RectangleMap(0.5 * (seq[n - 1] + seq[n])))
    assert report.verdict is True
    assert report.forbidden_set_distance > 1e-2


def test_rectangle_schwarzian_consistency():
    rmap = RectangleMap(0.6)
    s_map = abs(schwarzian_of_F(rmap, 0.0 + 0.0j))
    expected = 2.0 * abs(math.cos(2.0 * rmap.theta1))
    assert abs(s_map - expected) < 1e-6
    assert abs(2.0 * abs(sym_polygon_sum(rmap.spec)) - expected) < 1e-15


# ---------------------------------------------------------------------------
# symmetric polygon sums
# ---------------------------------------------------------------------------

def test_sym_polygon_square_and_hexagon_excluded():
    square = PolygonSpec.rectangle(math.pi / 4.0)
    assert abs(sym_polygon_sum(square)) < 1e-15
    report = sym_polygon_check(square)
    assert report.verdict is False
    assert report.hits_n1

    hexagon = PolygonSpec.symmetric(
        [math.pi / 6.0, math.pi / 2.0, 5.0 * math.pi / 6.0],
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    )
    assert abs(sym_polygon_sum(hexagon)) < 1e-15
    assert sym_polygon_check(hexagon).verdict is False


def test_sym_polygon_half_cosine():
    spec = PolygonSpec.rectangle(math.pi / 6.0)
    assert abs(sym_polygon_sum(spec) - 0.5) < 1e-14
    report = sym_polygon_check(spec)
    assert report.verdict is True
    assert report.nearest_n == 2
    assert abs(report.forbidden_set_distance - (math.sqrt(3.0) - 1.0)) < 1e-14
    assert abs(report.params["half_sum"] - 0.5) < 1e-14


def test_sym_polygon_rejects_asymmetric():
    odd = PolygonSpec(
        np.array([0.3, 1.7, 2.9, 4.4, 5.6]),
        np.array([0.45, 0.35, 0.5, 0.4, 0.3]),
    )
    with pytest.raises(DomainError):
        sym_polygon_sum(odd)
    skewed = PolygonSpec(
        np.array([0.2, 1.0, 0.2 + math.pi, 1.3 + math.pi]),
        np.array([0.5, 0.5, 0.5, 0.5]),
    )
    with pytest.raises(DomainError):
        sym_polygon_sum(skewed)


# ---------------------------------------------------------------------------
# report export
# ---------------------------------------------------------------------------

def test_report_text_layout():
    text = corollary_check(SectorMap(2)).as_text()
    lines = dict(line.split(" = ", 1) for line in text.splitlines())
    assert lines["kind"] == "disc_sector"
    assert lines["m"] == "2"
    assert lines["verdict"] == "true"
    assert lines["n1_hit"] == "false"
    assert abs(float(lines["schwarzian_abs"]) - math.sqrt(SECTOR_S2[2])) < 1e-12
    assert float(lines["tolerance"]) == 1e-8

    rc_text = rectangle_check(0.6).as_text()
    rc = dict(line.split(" = ", 1) for line in rc_text.splitlines())
    assert rc["nearest_n"] == "2"
    assert rc["verdict"] == "true"


def test_report_tolerance_configurable():
    # a loose tolerance turns a clear pass into a formal failure
    report = corollary_check(SectorMap(3), tolerance=0.1)
    assert report.verdict is False
    assert report.tolerance == 0.1
