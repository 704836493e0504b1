import math

import numpy as np
import pytest

from vortexdom.conformal import (
    DiscMap,
    EllipseMap,
    PolygonSpec,
    RectangleMap,
    RegularPolygonMap,
    SectorMap,
    SymPolygonMap,
    make_map,
    sc_integral,
    sector_map,
)
from vortexdom.errors import DomainError, PathError, ProximityError
from vortexdom.specialfn import elliptic_K

from _helpers import mobius_disc_automorphism, random_disc_points, sample_interior
from _oracles import ellipse_boundary_distance, fd_derivs3


from _helpers import FAMILY_IDS, make_families


@pytest.fixture(scope="module", params=range(len(FAMILY_IDS)), ids=FAMILY_IDS)
def family(request):
    return make_families()[request.param]


# -- basic map examples ------------------------------------------------------

def test_disc_identity():
    m = DiscMap()
    z = 0.3 + 0.1j
    assert m.phi(z) == z
    assert m.phi_derivs(z) == (1.0, 0.0, 0.0)
    assert m.f_inverse(z) == z
    assert m.schwarzian_of_F(z) == 0.0


def test_ellipse_center_maps_to_zero():
    m = EllipseMap(2.0)
    assert abs(m.phi(0.0)) < 1e-14


def test_ellipse_modulus_value():
    # independently solved: K(k')/K(k) = (4/pi) asinh(1/sqrt(3)) at a = 2
    m = EllipseMap(2.0)
    assert m.k == pytest.approx(0.91428386861668876, abs=1e-13)


def test_ellipse_center_derivatives():
    m = EllipseMap(2.0)
    d1, d2, d3 = m.phi_derivs(0.0)
    assert d1.real == pytest.approx(0.82508152401579146, rel=1e-12)
    assert abs(d1.imag) < 1e-12
    assert abs(d2) < 1e-12
    # centre cubic coefficient ratio in terms of the modulus
    k, K = m.k, m.modulus.K
    want = (1.0 / k) * ((1.0 + k * k) - (math.pi / (2.0 * K)) ** 2)
    assert abs(d3) / d1.real ** 3 == pytest.approx(want, rel=1e-10)


def test_ellipse_inverse_residual():
    m = EllipseMap(2.0)
    z = m.f_inverse(0.4)
    assert abs(m.phi(z) - 0.4) < 1e-9


def test_ellipse_slit_continuity():
    # the arcsine branch cut along |Re z| > sqrt(a^2-1) must be invisible
    m = EllipseMap(2.0)
    x = 1.85  # between sqrt(3) and a
    eps = 1e-9
    up = m.phi(x + 1j * eps)
    dn = m.phi(x - 1j * eps)
    on = m.phi(complex(x))
    assert abs(up - dn) < 1e-7
    assert abs(up - on) < 1e-7
    dup = m.phi_derivs(x + 1j * eps)
    ddn = m.phi_derivs(x - 1j * eps)
    for a_, b_ in zip(dup, ddn):
        assert abs(a_ - b_) < 1e-5 * max(1.0, abs(a_))


def test_ellipse_focus_derivatives_match_chain():
    # Taylor patch near the focus must agree with the chain just outside it
    m = EllipseMap(2.0)
    f = math.sqrt(3.0)
    rho = m._focus_rho
    for z in (f + 0.44 * rho, f + 0.46 * rho * 1j, -f + 0.3 * rho * (1 + 1j) / 2):
        d = m.phi_derivs(z)
        fd = fd_derivs3(m.phi, z, 1e-5)
        assert abs(d[0] - fd[0]) < 1e-7 * abs(d[0])
        assert abs(d[1] - fd[1]) < 1e-4 * max(1.0, abs(d[1]))
    # exactly at the focus the map stays conformal
    d1, _, _ = m.phi_derivs(complex(f))
    assert abs(d1) > 0.1


def test_ellipse_boundary_distance_vs_oracle():
    m = EllipseMap(2.0)
    rng = np.random.default_rng(5)
    pts = sample_interior(m, 40, rng)
    for z in pts:
        want = ellipse_boundary_distance(complex(z), 2.0)
        assert m.boundary_distance(complex(z)) == pytest.approx(want, rel=1e-8, abs=1e-10)


def test_sector_critical_points():
    xi1 = 1j * (2.0 + math.sqrt(5.0)) ** -0.5
    assert abs(sector_map(1, xi1)) < 1e-12
    xi2 = (1.0 / math.sqrt(2.0)) * (4.0 + math.sqrt(17.0)) ** -0.25 * (1.0 + 1j)
    assert abs(sector_map(2, xi2)) < 1e-12
    m2 = SectorMap(2)
    assert m2.xi0 == pytest.approx(xi2, abs=1e-14)


def test_sector_derivative_at_critical_point():
    m = SectorMap(2)
    d1, d2, _ = m.phi_derivs(m.xi0)
    assert d1.imag == pytest.approx(0.0, abs=1e-12)
    assert d1.real == pytest.approx(m.alpha_m / (1.0 - m.a_m ** 2), rel=1e-12)
    assert d1.real == pytest.approx(2.1622397337, rel=1e-9)
    # interior critical point of the field: second derivative vanishes there
    assert abs(d2) < 1e-10


def test_regular_polygon_center():
    m = RegularPolygonMap(4)
    assert abs(m.f_inverse(0.0)) < 1e-14
    assert abs(m.phi(0.0)) < 1e-14
    assert m.schwarzian_of_F(0.0) == pytest.approx(0.0, abs=1e-13)


def test_regular_polygon_schwarzian_zero_at_center():
    for mm in (3, 5, 8):
        m = RegularPolygonMap(mm)
        assert abs(m.schwarzian_of_F(0.0)) < 1e-13


def test_sym_polygon_center_schwarzian_real():
    half_th = np.array([0.5, 0.5 * np.pi, np.pi - 0.5])
    half_mu = np.array([0.3, 0.4, 0.3])
    m = SymPolygonMap(PolygonSpec.symmetric(half_th, half_mu))
    s = m.schwarzian_of_F(0.0)
    want = 2.0 * float(np.sum(half_mu * np.cos(2.0 * half_th)))
    assert abs(s.imag) < 1e-12
    assert s.real == pytest.approx(want, rel=1e-12)


def test_rectangle_center_schwarzian():
    m = RectangleMap(0.6)
    s = m.schwarzian_of_F(0.0)
    assert abs(s.imag) < 1e-12
    assert s.real == pytest.approx(2.0 * math.cos(2.0 * m.theta1), rel=1e-12)


# -- the side-angle integral -------------------------------------------------

def test_sc_integral_at_zero_is_shift():
    spec = PolygonSpec.rectangle(0.3)
    assert sc_integral(spec, 0.0) == spec.beta
    spec2 = PolygonSpec.symmetric([0.7, np.pi - 0.7], [0.5, 0.5], beta=1.5 + 0.25j)
    assert sc_integral(spec2, 0.0) == pytest.approx(1.5 + 0.25j, abs=0)


def test_sc_square_has_unit_aspect():
    m = SymPolygonMap(PolygonSpec.rectangle(0.25 * np.pi))
    v = m.vertices
    w = abs(v[0].real) * 2.0
    h = abs(v[0].imag) * 2.0
    assert h / w == pytest.approx(1.0, rel=1e-10)


def test_sc_rectangle_aspect_from_prevertex_angle():
    theta1 = math.acos(0.8)
    m = SymPolygonMap(PolygonSpec.rectangle(theta1))
    v = m.vertices
    aspect = abs(v[0].imag) / abs(v[0].real)
    assert aspect == pytest.approx(elliptic_K(0.6) / elliptic_K(0.8), rel=1e-10)


def test_sc_rectangle_F1_half_side():
    theta1 = math.acos(0.8)
    spec = PolygonSpec.rectangle(theta1)
    F1 = sc_integral(spec, 1.0)
    assert F1.real == pytest.approx(0.5 * elliptic_K(0.8), rel=1e-11)
    assert abs(F1.imag) < 1e-12


def test_sc_vertices_match_rectangle_sides():
    # vertex quadrature against the exact elliptic side lengths
    m = RectangleMap(0.6)
    sym = SymPolygonMap(m.spec)
    got = np.sort_complex(sym.vertices)
    want = np.sort_complex(np.array([
        m.half_width + 1j * m.half_height,
        m.half_width - 1j * m.half_height,
        -m.half_width + 1j * m.half_height,
        -m.half_width - 1j * m.half_height,
    ]))
    assert np.max(np.abs(got - want)) < 1e-10


def test_sc_path_guard():
    spec = PolygonSpec.rectangle(0.3)
    with pytest.raises(PathError):
        sc_integral(spec, np.exp(1j * 0.3))


def test_polygon_spec_validation():
    with pytest.raises(DomainError):
        PolygonSpec(np.array([0.1, 1.0, 2.0]), np.array([0.5, 0.5, 0.5]))
    with pytest.raises(DomainError):
        PolygonSpec(np.array([0.1, 1.0, 2.0]), np.array([0.5, 1.2, 0.3]))
    with pytest.raises(DomainError):
        PolygonSpec(np.array([2.0, 1.0, 0.1]), np.array([0.7, 0.7, 0.6]))
    spec = PolygonSpec(np.array([0.1, 1.0, 2.0]), np.array([0.7, 0.7, 0.6]))
    assert spec.is_convex


def test_sym_polygon_generic_normalization():
    # no symmetry at all: the in-disc critical point must still be found
    spec = PolygonSpec(
        np.array([0.3, 1.7, 2.9, 4.4, 5.6]),
        np.array([0.45, 0.35, 0.5, 0.4, 0.3]),
    )
    m = SymPolygonMap(spec)
    assert abs(m._w0) > 1e-3  # genuinely off-centre
    assert abs(m.phi(m.xi0)) < 1e-10
    d1, _, _ = m.phi_derivs(m.xi0)
    assert abs(d1.imag) < 1e-10
    assert d1.real > 0


# -- family-wide invariants ----------------------------------------------------

def test_normalization(family):
    m = family
    assert abs(m.phi(m.xi0)) < 1e-10
    d1, _, _ = m.phi_derivs(m.xi0)
    assert abs(np.imag(d1)) < 1e-10
    assert np.real(d1) > 0


def test_roundtrip_100_points(family):
    m = family
    rng = np.random.default_rng(17)
    pts = sample_interior(m, 100, rng)
    w = m.phi(pts)
    assert np.all(np.abs(w) < 1.0)
    back = m.f_inverse(w)
    assert np.max(np.abs(back - pts)) < 1e-8


def test_fd_derivative_consistency(family):
    # staged first-order checks: each analytic derivative is differenced once
    # against the previous one, keeping the stencil noise far below tolerance
    # (one-shot third differences of phi sit under roundoff at this step)
    m = family
    rng = np.random.default_rng(23)
    pts = sample_interior(m, 12, rng, margin=5e-2)
    h = 1e-4 * m.diameter() / 2.0
    stages = (
        (lambda z: m.phi(z), 0, 1e-7),
        (lambda z: m.phi_derivs(z)[0], 1, 1e-6),
        (lambda z: m.phi_derivs(z)[1], 2, 1e-5),
    )
    for z in pts:
        an = m.phi_derivs(complex(z))
        for func, idx, floor in stages:
            fd1 = fd_derivs3(func, complex(z), h)[0]
            assert abs(fd1 - an[idx]) <= max(1e-5 * abs(an[idx]), floor)


def test_inverse_derivs_consistency(family):
    m = family
    rng = np.random.default_rng(29)
    w = random_disc_points(8, rng, rmax=0.7)
    g1, g2, g3 = (np.atleast_1d(t) for t in m.inverse_derivs(w))
    for i, ww in enumerate(w):
        fd1 = fd_derivs3(m.f_inverse, complex(ww), 1e-4)[0]
        assert abs(fd1 - g1[i]) <= max(1e-6 * abs(g1[i]), 1e-8)
        fd2 = fd_derivs3(lambda u: m.inverse_derivs(u)[0], complex(ww), 1e-4)[0]
        assert abs(fd2 - g2[i]) <= max(1e-5 * abs(g2[i]), 1e-7)
        fd3 = fd_derivs3(lambda u: m.inverse_derivs(u)[1], complex(ww), 1e-4)[0]
        assert abs(fd3 - g3[i]) <= max(1e-5 * abs(g3[i]), 1e-6)


def test_schwarzian_chain_rule(family):
    # S(F o M)(w) = S(F)(M(w)) * (M'(w))^2 for a random disc automorphism
    m = family
    rng = np.random.default_rng(31)
    c = 0.4 * np.exp(1j * rng.uniform(0, 2 * np.pi))
    sigma = rng.uniform(0, 2 * np.pi)
    mob, mob_derivs = mobius_disc_automorphism(c, sigma)
    w = random_disc_points(20, rng, rmax=0.6)
    mw = mob(w)
    f1, f2, f3 = m.inverse_derivs(mw)
    n1, n2, n3 = mob_derivs(w)
    g1 = f1 * n1
    g2 = f2 * n1 ** 2 + f1 * n2
    g3 = f3 * n1 ** 3 + 3.0 * f2 * n1 * n2 + f1 * n3
    lhs = g3 / g1 - 1.5 * (g2 / g1) ** 2
    rhs = m.schwarzian_of_F(mw) * n1 ** 2
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_schwarzian_forward_relation(family):
    m = family
    rng = np.random.default_rng(37)
    pts = sample_interior(m, 10, rng, margin=5e-2)
    w = m.phi(pts)
    d1, _, _ = m.phi_derivs(pts)
    lhs = m.schwarzian_of_phi(pts)
    rhs = -m.schwarzian_of_F(w) * d1 ** 2
    scale = np.maximum(1.0, np.abs(lhs))
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-8


def test_boundary_guard(family):
    m = family
    # a point essentially on the boundary must be rejected
    if m.domain_kind == "disc":
        z = 1.0 - 1e-13
    elif m.domain_kind == "ellipse":
        z = m.a - 1e-13
    elif m.domain_kind == "rectangle":
        z = m.half_width - 1e-13
    elif m.domain_kind == "regular_polygon":
        # face midpoint: vertices sit on the real axis, faces between them
        z = (m.apothem - 1e-13) * np.exp(1j * np.pi / m.m)
    elif m.domain_kind == "sym_polygon":
        z = 0.5 * (m.vertices[0] + m.vertices[1])  # edge midpoint
    else:  # sector
        z = (1.0 - 1e-13) * np.exp(1j * 0.5 * np.pi / m.m)
    with pytest.raises(ProximityError):
        m.phi(z)
    with pytest.raises(ProximityError):
        m.f_inverse(1.0 - 1e-12)


def test_boundary_lengths():
    assert DiscMap().boundary_length() == pytest.approx(2 * math.pi, abs=0)
    assert SectorMap(1).boundary_length() == pytest.approx(2 + math.pi, abs=0)
    assert SectorMap(3).boundary_length() == pytest.approx(2 + math.pi / 3, abs=0)
    # ellipse a=2 perimeter, independent series value
    assert EllipseMap(2.0).boundary_length() == pytest.approx(9.688448, rel=1e-6)
    m = RectangleMap(0.6)
    assert m.boundary_length() == pytest.approx(4 * (m.half_width + m.half_height), abs=0)
    rp = RegularPolygonMap(4)
    assert rp.boundary_length() == pytest.approx(
        8 * rp.vertex_radius * math.sin(math.pi / 4), rel=1e-12
    )


def test_domain_parameter_validation():
    with pytest.raises(DomainError):
        EllipseMap(1.0)
    with pytest.raises(DomainError):
        RectangleMap(0.0)
    with pytest.raises(DomainError):
        RectangleMap(1.2)
    with pytest.raises(DomainError):
        RegularPolygonMap(2)
    with pytest.raises(DomainError):
        SectorMap(0)


def test_make_map_factory():
    assert make_map("disc").domain_kind == "disc"
    assert make_map("ellipse", a=2.0).domain_kind == "ellipse"
    assert make_map("rectangle", aspect=0.5).domain_kind == "rectangle"
    assert make_map("regular_polygon", m=6).domain_kind == "regular_polygon"
    assert make_map("disc_sector", m=2).domain_kind == "disc_sector"
    m = make_map(
        "sym_polygon",
        thetas=[0.5, 0.5 * np.pi, np.pi - 0.5, np.pi + 0.5, 1.5 * np.pi, 2 * np.pi - 0.5],
        mus=[0.3, 0.4, 0.3, 0.3, 0.4, 0.3],
    )
    assert m.domain_kind == "sym_polygon"
    with pytest.raises(DomainError):
        make_map("torus")
