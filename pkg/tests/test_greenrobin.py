import math

import numpy as np
import pytest

from vortexdom.conformal import EllipseMap, SectorMap
from vortexdom.errors import (
    ConvergenceError,
    DomainError,
    ProximityError,
    SingularityError,
)
from vortexdom.greenrobin import (
    PotentialField,
    conformal_radius,
    find_critical_point,
    grakhov_residual,
    green,
    green_regular,
    hamiltonian,
    koebe_distance_bounds,
    liouville_residual,
    robin,
    robin_grad,
    _phi_divided_diff,
)

from _helpers import FAMILY_IDS, make_families, sample_interior
from _oracles import fd_grad_z


@pytest.fixture(scope="module", params=range(len(FAMILY_IDS)), ids=FAMILY_IDS)
def field(request):
    return PotentialField(make_families()[request.param])


def disc_green(a, b):
    # reference disc Green function, written independently of the package
    return float(np.log(np.abs(a - b)) - np.log(np.abs(1.0 - a * np.conj(b))))


# -- Green function ----------------------------------------------------------

def test_green_disc_example():
    f = PotentialField(make_families()[0])
    assert green(f, 0.5, 0.2) == pytest.approx(math.log(1.0 / 3.0), abs=1e-14)


def test_green_symmetry_and_sign(field):
    rng = np.random.default_rng(41)
    z = sample_interior(field.map, 100, rng)
    w = sample_interior(field.map, 100, rng)
    clash = np.abs(z - w) < 1e-6
    w[clash] += 1e-3 * field.map.diameter()
    g_zw = green(field, z, w)
    g_wz = green(field, w, z)
    assert np.max(np.abs(g_zw - g_wz)) < 1e-11
    assert np.all(g_zw < 0)


def test_green_coincident_raises():
    f = PotentialField(make_families()[1])
    with pytest.raises(SingularityError):
        green(f, 0.4 + 0.2j, 0.4 + 0.2j)


def test_green_boundary_decay():
    # toward the boundary the Green function rises monotonically to zero
    m = EllipseMap(2.0)
    f = PotentialField(m)
    w = 0.3 + 0.2j
    direction = np.exp(0.4j)
    # find the boundary crossing of the ray and walk toward it
    tmax = 2.5
    ts = np.linspace(0.0, tmax, 400)
    inside = np.atleast_1d(m.boundary_distance(ts * direction)) > 0
    t_edge = ts[inside][-1]
    radii = t_edge * (1.0 - np.geomspace(0.2, 1e-4, 25))
    zs = radii * direction
    deltas = np.atleast_1d(m.boundary_distance(zs))
    sel = deltas < 0.1 * m.diameter()
    vals = green(f, zs[sel], w)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > -0.01


def test_green_sector_image_sum():
    # opening pi/2: images are the rotation by pi and the two conjugates
    m = SectorMap(2)
    f = PotentialField(m)
    rng = np.random.default_rng(43)
    z = sample_interior(m, 30, rng)
    w = sample_interior(m, 30, rng)
    om = np.exp(2j * np.pi / 2)
    want = np.zeros(z.shape)
    for k in range(2):
        want += np.log(np.abs(z - om ** k * w)) - np.log(
            np.abs(1.0 - z * np.conj(om ** k * w))
        )
        want -= np.log(np.abs(z - om ** k * np.conj(w))) - np.log(
            np.abs(1.0 - z * om ** k * w)
        )
    got = green(f, z, w)
    assert np.max(np.abs(got - want)) < 1e-11


# -- regular part ------------------------------------------------------------

def test_green_regular_disc_formula():
    f = PotentialField(make_families()[0])
    rng = np.random.default_rng(47)
    z = 0.8 * (rng.uniform(-1, 1, 20) + 1j * rng.uniform(-1, 1, 20)) / math.sqrt(2)
    w = 0.8 * (rng.uniform(-1, 1, 20) + 1j * rng.uniform(-1, 1, 20)) / math.sqrt(2)
    got = green_regular(f, z, w)
    want = -np.log(np.abs(1.0 - z * np.conj(w)))
    assert np.max(np.abs(got - want)) < 1e-13


def test_green_regular_diagonal_limit(field):
    rng = np.random.default_rng(53)
    z = sample_interior(field.map, 10, rng, margin=5e-2)
    eps = 1e-9 * field.map.diameter()
    near = green_regular(field, z, z + eps * np.exp(1j * rng.uniform(0, 7, 10)))
    on = robin(field, z)
    assert np.max(np.abs(near - on)) < 1e-6


def test_green_regular_exact_diagonal(field):
    rng = np.random.default_rng(59)
    z = sample_interior(field.map, 10, rng, margin=5e-2)
    assert np.max(np.abs(green_regular(field, z, z) - robin(field, z))) < 1e-12


def test_divided_diff_branches_agree():
    # both evaluation paths at a separation where either is accurate
    m = EllipseMap(2.0)
    rng = np.random.default_rng(61)
    z = sample_interior(m, 15, rng, margin=5e-2)
    w = z + 1e-3 * np.exp(1j * rng.uniform(0, 7, 15))
    direct = _phi_divided_diff(m, z, w, force="direct")
    taylor = _phi_divided_diff(m, z, w, force="taylor")
    assert np.max(np.abs(direct - taylor)) < 1e-8


# -- Robin function and conformal radius -------------------------------------

def test_robin_disc_formula():
    f = PotentialField(make_families()[0])
    rng = np.random.default_rng(67)
    z = 0.9 * np.sqrt(rng.uniform(0, 1, 50)) * np.exp(1j * rng.uniform(0, 7, 50))
    want = -np.log(1.0 - np.abs(z) ** 2)
    assert np.max(np.abs(robin(f, z) - want)) < 1e-12


@pytest.mark.parametrize("m_order", [1, 2, 3])
def test_robin_sector_image_formula(m_order):
    m = SectorMap(m_order)
    f = PotentialField(m)
    rng = np.random.default_rng(71)
    z = sample_interior(m, 25, rng, margin=2e-2)
    om = np.exp(2j * np.pi / m_order)
    want = -np.log(1.0 - np.abs(z) ** 2) - np.log(
        np.abs((z - np.conj(z)) / (1.0 - z * z))
    )
    for k in range(1, m_order):
        want += np.log(np.abs(z - om ** k * z)) - np.log(
            np.abs(1.0 - z * np.conj(om ** k * z))
        )
        want -= np.log(np.abs(z - om ** k * np.conj(z))) - np.log(
            np.abs(1.0 - z * om ** k * z)
        )
    got = robin(f, z)
    assert np.max(np.abs(got - want)) < 1e-10


def test_robin_boundary_bounds(field):
    rng = np.random.default_rng(73)
    z = sample_interior(field.map, 200, rng, margin=2e-3)
    r = robin(field, z)
    delta = np.atleast_1d(field.map.boundary_distance(z))
    assert np.all(r >= -np.log(4.0 * delta) - 1e-12)
    assert np.all(r <= -np.log(delta) + 1e-12)


def test_koebe_bracket_contains_distance(field):
    rng = np.random.default_rng(79)
    z = sample_interior(field.map, 100, rng, margin=2e-3)
    lo, hi = koebe_distance_bounds(field, z)
    delta = np.atleast_1d(field.map.boundary_distance(z))
    assert np.all(delta >= lo - 1e-12)
    assert np.all(delta <= hi + 1e-12)


def test_conformal_radius_matches_robin(field):
    rng = np.random.default_rng(83)
    z = sample_interior(field.map, 30, rng)
    r = conformal_radius(field, z)
    assert np.all(r > 0)
    assert np.max(np.abs(r - np.exp(-robin(field, z)))) < 1e-12 * np.max(r)


# -- gradient ----------------------------------------------------------------

def test_robin_grad_disc_example():
    f = PotentialField(make_families()[0])
    for q in (0.1, 0.45, 0.8):
        g = robin_grad(f, q)
        assert g == pytest.approx(q / (1.0 - q * q), abs=1e-14)


def test_robin_grad_ellipse_center_zero():
    f = PotentialField(EllipseMap(2.0))
    assert abs(robin_grad(f, 0.0)) < 1e-12


def test_robin_grad_matches_fd(field):
    rng = np.random.default_rng(89)
    z = sample_interior(field.map, 8, rng, margin=5e-2)
    h = 1e-6 * field.map.diameter() / 2.0
    for zz in z:
        fd = fd_grad_z(lambda p: robin(field, p), complex(zz), h)
        an = robin_grad(field, complex(zz))
        assert abs(fd - an) <= 1e-5 * max(1.0, abs(an))


def test_hamiltonian_scaling(field):
    rng = np.random.default_rng(97)
    z = sample_interior(field.map, 5, rng)
    r = robin(field, z)
    assert np.max(np.abs(hamiltonian(field, z) - r / 4.0)) < 1e-14
    double = PotentialField(field.map, gamma=2.0 * math.pi)
    assert np.max(np.abs(hamiltonian(double, z) - r / 2.0)) < 1e-14


def test_gamma_validation():
    with pytest.raises(DomainError):
        PotentialField(make_families()[0], gamma=0.0)
    with pytest.raises(DomainError):
        PotentialField(make_families()[0], gamma=-1.0)


# -- Liouville equation ------------------------------------------------------

def test_liouville_disc_example():
    f = PotentialField(make_families()[0])
    assert liouville_residual(f, 0.3, 1e-3) < 1e-4


def test_liouville_ellipse_example():
    f = PotentialField(EllipseMap(2.0))
    assert liouville_residual(f, 0.5, 1e-3) < 1e-3


def test_liouville_second_order(field):
    rng = np.random.default_rng(101)
    z = sample_interior(field.map, 4, rng, margin=2e-1)
    for zz in z:
        r1 = liouville_residual(field, complex(zz), 2e-3)
        r2 = liouville_residual(field, complex(zz), 1e-3)
        assert r2 == pytest.approx(r1 / 4.0, rel=0.3)


def test_liouville_stencil_guard():
    m = make_families()[0]
    f = PotentialField(m)
    with pytest.raises(ProximityError):
        liouville_residual(f, 0.999, 5e-3)


# -- critical points ---------------------------------------------------------

def test_critical_point_disc():
    f = PotentialField(make_families()[0])
    assert abs(find_critical_point(f, 0.3 + 0.2j)) < 1e-9


def test_critical_point_ellipse():
    f = PotentialField(EllipseMap(2.0))
    assert abs(find_critical_point(f, 0.5 + 0.3j)) < 1e-9


@pytest.mark.parametrize("m_order", [1, 2, 4])
def test_critical_point_sector(m_order):
    m = SectorMap(m_order)
    f = PotentialField(m)
    want = m.t_m * np.exp(1j * np.pi / (2.0 * m_order))
    got = find_critical_point(f, 0.5 * want + 0.1 * abs(want))
    assert abs(got - want) < 1e-8
    assert grakhov_residual(f, want) < 1e-10


def test_critical_point_seed_independence():
    m = SectorMap(2)
    f = PotentialField(m)
    rng = np.random.default_rng(103)
    seeds = sample_interior(m, 3, rng, margin=2e-1)
    pts = [find_critical_point(f, s) for s in seeds]
    for p in pts[1:]:
        assert abs(p - pts[0]) < 1e-8


def test_critical_point_hessian_positive_definite():
    # convex domains: the Robin function is strictly convex at its minimum
    fams = make_families()
    for m in (fams[0], fams[1], fams[2], fams[3], fams[6]):
        f = PotentialField(m)
        z0 = find_critical_point(f, m.xi0 + 0.05 * m.diameter() * (1 + 1j) / 4)
        h = 1e-4 * m.diameter()
        rpp = robin(f, z0 + h)
        rmm = robin(f, z0 - h)
        rc = robin(f, z0)
        rip = robin(f, z0 + 1j * h)
        rim = robin(f, z0 - 1j * h)
        rxx = (rpp - 2 * rc + rmm) / h ** 2
        ryy = (rip - 2 * rc + rim) / h ** 2
        rxy = (
            robin(f, z0 + h + 1j * h)
            - robin(f, z0 + h - 1j * h)
            - robin(f, z0 - h + 1j * h)
            + robin(f, z0 - h - 1j * h)
        ) / (4 * h ** 2)
        eigs = np.linalg.eigvalsh(np.array([[rxx, rxy], [rxy, ryy]]))
        assert np.all(eigs > 0)


def test_grakhov_residual_nonzero_off_critical():
    f = PotentialField(SectorMap(2))
    assert grakhov_residual(f, 0.5 * np.exp(1j * 0.5)) > 1e-3
