"""Tests for the Floquet machinery around periodic orbits."""

import math

import numpy as np
import pytest

from vortexdom.conformal import EllipseMap
from vortexdom.errors import DomainError
from vortexdom.greenrobin import PotentialField, hamiltonian
from vortexdom.monodromy import (
    HypothesisScan,
    MonodromyResult,
    ScanRecord,
    _integrate_fundamental,
    disc_scalar_trace,
    generator,
    hypothesis_scan,
    monodromy_matrix,
    spectral_check,
)
from vortexdom.pointvortex import trace_orbit

from _helpers import FAMILY_IDS, make_families


def disc_trace_exact(level):
    zeta = 0.5 * (math.exp(4.0 * level) - 1.0)
    return 2.0 * math.cos(2.0 * math.pi * math.sqrt(3.0) * zeta)


LAMBDA_1 = 0.25 * math.log(1.0 + 2.0 / math.sqrt(3.0))
LAMBDA_2 = 0.25 * math.log(1.0 + 4.0 / math.sqrt(3.0))


@pytest.fixture(scope="module")
def disc_field():
    from vortexdom.conformal import DiscMap

    return PotentialField(DiscMap())


@pytest.fixture(scope="module")
def ellipse_field():
    return PotentialField(EllipseMap(2.0))


# -- generator entries --------------------------------------------------------


def test_generator_disc_entries(disc_field):
    lam = 0.3
    orbit = trace_orbit(disc_field, lam)
    phi0 = float(np.angle(orbit.samples[0]))
    zeta = 0.5 * (math.exp(4.0 * lam) - 1.0)
    for phi in (0.0, 0.7, 2.1, 5.5):
        A = generator(disc_field, orbit, phi)
        u_exp = -1j * math.exp(4.0 * lam)
        v_exp = 1j * zeta * np.exp(-2j * (phi + phi0))
        assert abs(A[0, 0] - u_exp) < 1e-8
        assert abs(A[0, 1] - v_exp) < 1e-8
        assert A[0, 0] + A[1, 1] == 0
        assert A[1, 0] == np.conj(A[0, 1])
        assert A[1, 1] == np.conj(A[0, 0])


def test_generator_array_phase(disc_field):
    orbit = trace_orbit(disc_field, 0.2)
    phis = np.array([0.0, 1.0, 4.0])
    A = generator(disc_field, orbit, phis)
    assert A.shape == (3, 2, 2)
    for i, phi in enumerate(phis):
        assert np.allclose(A[i], generator(disc_field, orbit, float(phi)))


def test_generator_v_vanishes_toward_critical(ellipse_field):
    lam_min = hamiltonian(ellipse_field, 0.0)
    phis = np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)
    vmax = {}
    for d in (0.04, 0.004):
        orbit = trace_orbit(ellipse_field, lam_min + d)
        A = generator(ellipse_field, orbit, phis)
        vmax[d] = float(np.max(np.abs(A[:, 0, 1])))
    assert vmax[0.004] < 0.03
    assert vmax[0.004] < 0.15 * vmax[0.04]


# -- fundamental matrix -------------------------------------------------------


def test_disc_closed_form_ten_levels(disc_field):
    for lam in np.linspace(0.05, 0.5, 10):
        orbit = trace_orbit(disc_field, float(lam))
        res = monodromy_matrix(disc_field, orbit)
        assert abs(res.trace - disc_trace_exact(float(lam))) < 1e-6


def test_resonance_gap_vanishes(disc_field):
    orbit = trace_orbit(disc_field, LAMBDA_1)
    res = monodromy_matrix(disc_field, orbit)
    assert res.trace_gap < 1e-5


def test_gap_large_between_resonances(disc_field):
    mid = 0.5 * (LAMBDA_1 + LAMBDA_2)
    orbit = trace_orbit(disc_field, mid)
    res = monodromy_matrix(disc_field, orbit)
    assert res.trace_gap > 1e-2


def test_scalar_reduction_cross_check(disc_field):
    for lam in (0.1, 0.3):
        exact = disc_trace_exact(lam)
        assert abs(disc_scalar_trace(lam) - exact) < 1e-7
        orbit = trace_orbit(disc_field, lam)
        res = monodromy_matrix(disc_field, orbit)
        assert abs(res.trace.real - disc_scalar_trace(lam)) < 1e-6


def test_constant_coefficient_limit():
    # with v = 0 and constant imaginary u the flow decouples into phases
    c = 1.7
    A = np.zeros((8192, 2, 2), dtype=complex)
    A[:, 0, 0] = -1j * c
    A[:, 1, 1] = 1j * c
    M, det_drift, structure_gap = _integrate_fundamental(A)
    expected = np.diag([np.exp(-2j * np.pi * c), np.exp(2j * np.pi * c)])
    assert np.max(np.abs(M - expected)) < 1e-10
    assert det_drift < 1e-10
    assert structure_gap < 1e-12


def test_invariants_all_families():
    for cmap, name in zip(make_families(), FAMILY_IDS):
        field = PotentialField(cmap)
        lam = hamiltonian(field, cmap.xi0) + 0.35
        orbit = trace_orbit(field, lam)
        res = monodromy_matrix(field, orbit)
        assert res.det_drift < 1e-8, name
        assert res.structure_gap < 1e-8, name
        assert abs(res.trace.imag) < 1e-8, name


def test_monodromy_needs_enough_samples(disc_field):
    orbit = trace_orbit(disc_field, 0.3, n_samples=128)
    with pytest.raises(DomainError):
        monodromy_matrix(disc_field, orbit)


# -- spectral check -----------------------------------------------------------


def test_spectral_check_identity():
    ok, margin = spectral_check(np.eye(2))
    assert ok is False
    assert margin == 0.0


def test_spectral_check_disc(disc_field):
    orbit = trace_orbit(disc_field, 0.1)
    res = monodromy_matrix(disc_field, orbit)
    ok, margin = spectral_check(res)
    assert ok
    assert margin == res.trace_gap

    orbit = trace_orbit(disc_field, LAMBDA_1)
    res = monodromy_matrix(disc_field, orbit)
    ok, margin = spectral_check(res)
    assert not ok
    assert margin < 1e-5


def test_spectral_check_rejects_bad_shape():
    with pytest.raises(DomainError):
        spectral_check(np.eye(3))


# -- hypothesis scan ----------------------------------------------------------


def test_scan_clear_interval(disc_field):
    scan = hypothesis_scan(disc_field, 0.05, 0.15, 5)
    assert isinstance(scan, HypothesisScan)
    assert scan.verdict
    assert scan.offending == ()
    for rec in scan.records:
        assert isinstance(rec, ScanRecord)
        assert rec.ok and rec.error is None
        expected_dT = -16.0 * math.pi * math.exp(-4.0 * rec.level)
        assert abs(rec.dperiod - expected_dT) < 1e-3 * abs(expected_dT)


def test_scan_straddling_resonance(disc_field):
    # the gap grows quadratically off the resonance, so the grid is centred
    # on it: the middle level lands on lambda_1 where the check must fail
    scan = hypothesis_scan(disc_field, LAMBDA_1 - 0.02, LAMBDA_1 + 0.02, 5)
    assert not scan.verdict
    assert scan.offending
    assert min(abs(lam - LAMBDA_1) for lam in scan.offending) < 1e-12


def test_scan_continues_past_errors(disc_field):
    scan = hypothesis_scan(disc_field, -0.05, 0.05, 3)
    assert not scan.verdict
    errs = [r for r in scan.records if r.error is not None]
    assert len(errs) == 2
    good = [r for r in scan.records if r.error is None]
    assert len(good) == 1 and good[0].ok


def test_scan_ellipse_short_interval(ellipse_field):
    lam_min = hamiltonian(ellipse_field, 0.0)
    scan = hypothesis_scan(ellipse_field, lam_min + 0.275, lam_min + 0.325, 2)
    for rec in scan.records:
        assert rec.error is None
        assert rec.period > 0
        assert rec.trace_gap is not None and rec.trace_gap > 0
        assert abs(rec.trace.imag) < 1e-8


def test_scan_argument_validation(disc_field):
    with pytest.raises(DomainError):
        hypothesis_scan(disc_field, 0.2, 0.1, 3)
    with pytest.raises(DomainError):
        hypothesis_scan(disc_field, 0.1, 0.2, 0)
