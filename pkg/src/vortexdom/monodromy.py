"""Floquet analysis of the linearization around a periodic vortex orbit.

The linearized flow in co-rotating phase phi obeys M' = A(phi) M with the
2x2 generator

    A(phi) = [[u, v], [conj(v), conj(u)]],
    u = -(i T / 4 pi) / r_D(p(phi))^2,
    v = (i T / 8 pi) (dR/dz (p(phi)))^2,

where p is the orbit and T its period.  u is purely imaginary, so A is
trace-free and the fundamental matrix keeps determinant one; the spectral
hypothesis for persistence is Tr M(2 pi) != 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._fourier import trig_resample
from .errors import AccuracyError, DomainError, VortexError
from .greenrobin import PotentialField
from .pointvortex import PeriodicOrbit, period_derivative, trace_orbit

__all__ = [
    "MonodromyResult",
    "ScanRecord",
    "HypothesisScan",
    "generator",
    "monodromy_matrix",
    "spectral_check",
    "hypothesis_scan",
    "disc_scalar_trace",
]

N_STEPS = 4096


@dataclass(frozen=True)
class MonodromyResult:
    """Fundamental matrix after one period with its quality measures.

    ``det_drift`` and ``structure_gap`` are maxima monitored along the
    integration (every 64 steps and at the endpoint), so they bound the
    corresponding defects of every intermediate fundamental matrix.
    """

    matrix: NDArray
    trace: complex
    trace_gap: float
    det_drift: float
    structure_gap: float


def _orbit_data(field: PotentialField, points):
    """Generator entries u, v at the given orbit points."""
    w, d1, d2, _ = field.map.phi_with_derivs(points)
    w = np.atleast_1d(w)
    d1 = np.atleast_1d(d1)
    d2 = np.atleast_1d(d2)
    dzR = d2 / (2.0 * d1) + d1 * np.conj(w) / (1.0 - np.abs(w) ** 2)
    r = (1.0 - np.abs(w) ** 2) / np.abs(d1)
    return dzR, r


def generator(field: PotentialField, orbit: PeriodicOrbit, phi):
    """Evaluate the 2x2 generator at phase phi (scalar or array).

    The orbit position at arbitrary phase comes from trigonometric
    interpolation of the stored samples.
    """
    phis = np.atleast_1d(np.asarray(phi, dtype=float))
    m = orbit.samples.size
    coef = np.fft.fft(orbit.samples) / m
    k = np.fft.fftfreq(m, d=1.0 / m)
    # split the Nyquist mode evenly so the interpolant is balanced
    if m % 2 == 0:
        coef = np.concatenate([coef, [0.5 * coef[m // 2]]])
        coef[m // 2] *= 0.5
        k = np.concatenate([k, [m // 2.0]])
        k[m // 2] = -(m // 2.0)
    p = np.exp(1j * np.outer(phis, k)) @ coef
    dzR, r = _orbit_data(field, p)
    T = orbit.period
    u = -1j * (T / (4.0 * math.pi)) / r ** 2
    v = 1j * (T / (8.0 * math.pi)) * dzR ** 2
    out = np.empty(phis.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = u
    out[..., 0, 1] = v
    out[..., 1, 0] = np.conj(v)
    out[..., 1, 1] = np.conj(u)
    return out[0] if np.isscalar(phi) or np.asarray(phi).ndim == 0 else out


def _integrate_fundamental(A_half):
    """RK4 for M' = A M over [0, 2 pi] with A sampled at half steps.

    A_half holds the generator at phases 2 pi j / (2 n) for j = 0 .. 2n-1;
    step j uses entries 2j, 2j+1 and (2j+2) mod 2n.  Returns the final
    matrix together with running maxima of the determinant drift and the
    structure defect, sampled every 64 steps and at the end.
    """
    n2 = A_half.shape[0]
    n = n2 // 2
    h = 2.0 * math.pi / n
    M = np.eye(2, dtype=complex)
    det_drift = 0.0
    structure_gap = 0.0

    def defects(mat):
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        s = max(
            abs(mat[1, 1] - np.conj(mat[0, 0])),
            abs(mat[1, 0] - np.conj(mat[0, 1])),
        )
        return abs(det - 1.0), s

    for j in range(n):
        A0 = A_half[2 * j]
        Am = A_half[2 * j + 1]
        A1 = A_half[(2 * j + 2) % n2]
        k1 = A0 @ M
        k2 = Am @ (M + 0.5 * h * k1)
        k3 = Am @ (M + 0.5 * h * k2)
        k4 = A1 @ (M + h * k3)
        M = M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if j % 64 == 63 or j == n - 1:
            d, s = defects(M)
            det_drift = max(det_drift, d)
            structure_gap = max(structure_gap, s)
    return M, det_drift, structure_gap


def monodromy_matrix(field: PotentialField, orbit: PeriodicOrbit) -> MonodromyResult:
    """Integrate the fundamental matrix over one period.

    Parameters
    ----------
    field : PotentialField
        Domain and circulation.
    orbit : PeriodicOrbit
        Traced orbit with at least 256 samples; the generator is evaluated
        on a trigonometrically refined grid of 2 * N_STEPS points.

    Returns
    -------
    MonodromyResult

    Raises
    ------
    DomainError
        If the orbit carries fewer than 256 samples.
    AccuracyError
        If the determinant drifts from 1 by more than 1e-6.
    """
    if orbit.samples.size < 256:
        raise DomainError("monodromy integration needs an orbit with >= 256 samples")
    p = trig_resample(orbit.samples, 2 * N_STEPS)
    dzR, r = _orbit_data(field, p)
    T = orbit.period
    u = -1j * (T / (4.0 * math.pi)) / r ** 2
    v = 1j * (T / (8.0 * math.pi)) * dzR ** 2
    A = np.empty((2 * N_STEPS, 2, 2), dtype=complex)
    A[:, 0, 0] = u
    A[:, 0, 1] = v
    A[:, 1, 0] = np.conj(v)
    A[:, 1, 1] = np.conj(u)
    M, det_drift, structure_gap = _integrate_fundamental(A)
    if det_drift > 1e-6:
        raise AccuracyError(
            "fundamental matrix determinant drifted by %.3e" % det_drift
        )
    trace = complex(M[0, 0] + M[1, 1])
    return MonodromyResult(
        matrix=M,
        trace=trace,
        trace_gap=abs(trace - 2.0),
        det_drift=det_drift,
        structure_gap=structure_gap,
    )


def spectral_check(result, threshold: float = 1e-4):
    """Decide whether 1 stays out of the monodromy spectrum.

    For determinant-one structured matrices, 1 in the spectrum is
    equivalent to Tr = 2, so the margin is |Tr - 2|.  Accepts either a
    MonodromyResult or a bare 2x2 matrix.

    Returns
    -------
    (ok, margin) : bool, float
    """
    if isinstance(result, MonodromyResult):
        gap = result.trace_gap
    else:
        mat = np.asarray(result, dtype=complex)
        if mat.shape != (2, 2):
            raise DomainError("spectral_check expects a 2x2 matrix")
        gap = abs(complex(mat[0, 0] + mat[1, 1]) - 2.0)
    return gap > threshold, float(gap)


@dataclass(frozen=True)
class ScanRecord:
    """Per-level outcome of a hypothesis scan."""

    level: float
    period: float | None
    dperiod: float | None
    trace: complex | None
    trace_gap: float | None
    ok: bool
    error: str | None = None


@dataclass(frozen=True)
class HypothesisScan:
    """Scan result: per-level records and the aggregate verdict."""

    records: tuple
    verdict: bool
    threshold: float
    deriv_tol: float

    @property
    def offending(self) -> tuple:
        return tuple(r.level for r in self.records if not r.ok)


def hypothesis_scan(
    field: PotentialField,
    lambda_lo: float,
    lambda_hi: float,
    n: int,
    threshold: float = 1e-4,
    deriv_tol: float = 1e-6,
    n_samples: int = 256,
) -> HypothesisScan:
    """Check the non-degeneracy hypotheses on a grid of energy levels.

    Each level needs a non-vanishing period derivative and a monodromy
    trace bounded away from 2.  Orbit or integration failures at one level
    are recorded and the scan continues; any failure makes the overall
    verdict false.
    """
    if n < 1:
        raise DomainError("scan needs at least one level")
    if not lambda_hi >= lambda_lo:
        raise DomainError("scan interval is empty")
    levels = np.linspace(lambda_lo, lambda_hi, n)
    records = []
    for lam in levels:
        lam = float(lam)
        try:
            orbit = trace_orbit(field, lam, n_samples=n_samples)
            res = monodromy_matrix(field, orbit)
            dT = period_derivative(field, lam)
            ok = res.trace_gap > threshold and abs(dT) > deriv_tol
            records.append(
                ScanRecord(
                    level=lam,
                    period=orbit.period,
                    dperiod=dT,
                    trace=res.trace,
                    trace_gap=res.trace_gap,
                    ok=ok,
                )
            )
        except VortexError as exc:
            records.append(
                ScanRecord(
                    level=lam,
                    period=None,
                    dperiod=None,
                    trace=None,
                    trace_gap=None,
                    ok=False,
                    error=str(exc),
                )
            )
    verdict = bool(records) and all(r.ok for r in records)
    return HypothesisScan(
        records=tuple(records),
        verdict=verdict,
        threshold=threshold,
        deriv_tol=deriv_tol,
    )


def disc_scalar_trace(level: float, n_steps: int = N_STEPS) -> float:
    """Disc monodromy trace through the second-order scalar reduction.

    Eliminating one component of the structured system yields, on the unit
    disc, y'' - 4 i zeta y' - zeta^2 y = 0 with zeta = (e^{4 level} - 1)/2.
    The scalar fundamental system carries the gauge factor e^{2 i zeta phi}
    relative to the determinant-one form, so the structured trace is
    recovered as e^{-4 pi i zeta} times the scalar one.  Cross-check path;
    independent of the matrix integration.
    """
    zeta = 0.5 * (math.exp(4.0 * level) - 1.0)

    def rhs(state):
        y, yp = state
        return np.array([yp, 4j * zeta * yp + zeta * zeta * y])

    h = 2.0 * math.pi / n_steps
    basis = []
    for init in (np.array([1.0 + 0j, 0j]), np.array([0j, 1.0 + 0j])):
        s = init
        for _ in range(n_steps):
            k1 = rhs(s)
            k2 = rhs(s + 0.5 * h * k1)
            k3 = rhs(s + 0.5 * h * k2)
            k4 = rhs(s + h * k3)
            s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        basis.append(s)
    scalar_trace = basis[0][0] + basis[1][1]
    corrected = np.exp(-4j * math.pi * zeta) * scalar_trace
    return float(corrected.real)
