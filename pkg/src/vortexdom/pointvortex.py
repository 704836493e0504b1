"""Single-vortex trajectories: periodic orbits, periods, and enclosed areas.

The vortex at z moves by dz/dt = i (gamma / 2 pi) conj(dR/dz), so every
regular level set of the Hamiltonian H = (gamma / 4 pi) R is a union of
periodic orbits.  Orbits are traced with an adaptive embedded Runge-Kutta
scheme; the return to a ray-shaped section through the seed defines the
period, and dense output resamples the loop at uniform phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from .errors import (
    AccuracyError,
    DomainError,
    NonClosureError,
    NonEllipticError,
    VortexError,
)
from .greenrobin import PotentialField, hamiltonian, robin_grad

__all__ = [
    "PeriodicOrbit",
    "area_enclosed",
    "boundary_period_asymptote",
    "period",
    "period_at_critical",
    "period_derivative",
    "trace_orbit",
    "vortex_velocity",
]

# Hamiltonian drift above this aborts an orbit trace
DRIFT_LIMIT = 1e-6


def vortex_velocity(field: PotentialField, z):
    """Vortex velocity i (gamma / 2 pi) conj(dR/dz); zero at critical points."""
    g = robin_grad(field, z)
    return 1j * (field.gamma / (2.0 * math.pi)) * np.conj(g)


@dataclass(frozen=True)
class PeriodicOrbit:
    """One closed orbit of the vortex Hamiltonian.

    Parameters
    ----------
    level : float
        Hamiltonian value on the orbit.
    period : float
        Return time to the seed section.
    samples : array of complex
        Positions at uniform phase 2 pi j / M, i.e. times j * period / M.
    area : float
        Enclosed area, positive for the counterclockwise traversal.
    """

    level: float
    period: float
    samples: NDArray[np.complex128]
    area: float

    @property
    def omega(self) -> float:
        """Angular frequency 2 pi / period."""
        return 2.0 * math.pi / self.period

    def diameter(self) -> float:
        c = np.mean(self.samples)
        return 2.0 * float(np.max(np.abs(self.samples - c)))


def _spectral_area(samples) -> float:
    """Enclosed area (1/2) Int Im(conj(g) g') dphi from uniform samples."""
    g = np.asarray(samples, dtype=complex)
    n = g.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    gp = np.fft.ifft(1j * k * np.fft.fft(g))
    return math.pi * float(np.mean(np.imag(np.conj(g) * gp)))


def area_enclosed(orbit: PeriodicOrbit) -> float:
    """Spectrally accurate enclosed area of a traced orbit."""
    return _spectral_area(orbit.samples)


def _seed_on_ray(field: PotentialField, level: float) -> complex:
    """Bisect the Hamiltonian along a ray from the normalization point."""
    cmap = field.map
    xi0 = complex(cmap.xi0)
    diam = cmap.diameter()
    u = xi0 / abs(xi0) if abs(xi0) > 1e-12 * diam else 1.0 + 0.0j
    lam_min = hamiltonian(field, xi0)
    if not level > lam_min + 1e-13:
        raise DomainError(
            "level %.6g is not above the critical value %.6g" % (level, lam_min)
        )

    # boundary crossing of the ray, by bisection on the signed distance
    lo, hi = 0.0, diam
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cmap.boundary_distance(xi0 + mid * u) > 0:
            lo = mid
        else:
            hi = mid
    s_bd = lo

    s_hi = s_bd - 1e-7 * diam
    for _ in range(60):
        if hamiltonian(field, xi0 + s_hi * u) > level:
            break
        gap = s_bd - s_hi
        if gap < 1e-8 * diam:
            raise DomainError("level is too large to bracket along the seed ray")
        s_hi = s_bd - 0.5 * gap
    s_lo = 0.0
    for _ in range(200):
        mid = 0.5 * (s_lo + s_hi)
        h_mid = hamiltonian(field, xi0 + mid * u)
        if abs(h_mid - level) < 1e-12:
            return xi0 + mid * u
        if h_mid < level:
            s_lo = mid
        else:
            s_hi = mid
    return xi0 + 0.5 * (s_lo + s_hi) * u


def _integrate_loop(field, seed, xi0, u, t_cap, terminal):
    def rhs(_, y):
        # trial stages of an adaptive step may poke past the boundary where
        # the potential is undefined; a huge bounded value makes the embedded
        # error estimate explode so the stepper rejects and retries smaller,
        # while accepted steps only ever see the true field
        try:
            v = vortex_velocity(field, complex(y[0], y[1]))
        except VortexError:
            return (1e50, 1e50)
        return (v.real, v.imag)

    def section(_, y):
        return (y[0] - xi0.real) * (-u.imag) + (y[1] - xi0.imag) * u.real

    v0 = vortex_velocity(field, seed)
    sdot = (-u.imag) * v0.real + u.real * v0.imag
    if sdot == 0.0:
        raise DomainError("seed velocity is tangent to the section ray")
    section.direction = 1.0 if sdot > 0 else -1.0
    # the start sits exactly on the section, so the first matching crossing
    # may or may not register depending on rounding; allowing two event hits
    # guarantees the true return is among them
    section.terminal = 2 if terminal else False
    sol = solve_ivp(
        rhs,
        (0.0, t_cap),
        (seed.real, seed.imag),
        method="RK45",
        rtol=1e-10,
        atol=1e-10,
        dense_output=True,
        events=section,
    )
    if not sol.success:
        raise NonClosureError("orbit integration failed: %s" % sol.message)
    return sol


def trace_orbit(field: PotentialField, level: float, n_samples: int = 256) -> PeriodicOrbit:
    """Trace the closed orbit at a Hamiltonian level and resample it.

    The seed is found by bisection along a ray from the critical point; the
    period is the first same-direction return to that ray.  Raises a
    non-closure error when no return occurs within the time cap, and an
    accuracy error when the Hamiltonian drifts by more than ``DRIFT_LIMIT``.
    """
    cmap = field.map
    xi0 = complex(cmap.xi0)
    seed = _seed_on_ray(field, level)
    u = (seed - xi0) / abs(seed - xi0)
    v0 = vortex_velocity(field, seed)
    t_est = 2.0 * math.pi * abs(seed - xi0) / abs(v0)

    # start a hair upstream of the section so the departure registers as a
    # genuine first crossing; the period is then the gap between the first
    # two same-direction crossings on the seed half-line, which sidesteps the
    # sign ambiguity of an event exactly at t = 0
    start = seed - (1e-9 * cmap.diameter()) * v0 / abs(v0)

    def _ray_hits(sol):
        hits = []
        for te, ye in zip(sol.t_events[0], sol.y_events[0]):
            radial = (ye[0] - xi0.real) * u.real + (ye[1] - xi0.imag) * u.imag
            if radial > 0:
                hits.append((float(te), complex(ye[0], ye[1])))
        return hits

    sol = _integrate_loop(field, start, xi0, u, 30.0 * t_est, terminal=True)
    hits = _ray_hits(sol)
    if len(hits) < 2:
        # a terminal crossing landed on the wrong half-line; collect every
        # crossing over the full span and filter
        sol = _integrate_loop(field, start, xi0, u, 30.0 * t_est, terminal=False)
        hits = _ray_hits(sol)
    if len(hits) < 2:
        raise NonClosureError("no section return within %.3g time units" % (30 * t_est))

    (t_dep, z_dep), (t_ret, state) = hits[0], hits[1]
    period_len = t_ret - t_dep
    ts = t_dep + period_len * np.arange(n_samples) / n_samples
    ys = sol.sol(ts)
    samples = ys[0] + 1j * ys[1]

    orbit_diam = 2.0 * float(np.max(np.abs(samples - np.mean(samples))))
    if abs(state - z_dep) > 1e-7 * orbit_diam:
        raise NonClosureError(
            "return point misses the seed by %.3e" % abs(state - z_dep)
        )
    drift = float(np.max(np.abs(hamiltonian(field, samples) - level)))
    if drift > DRIFT_LIMIT:
        raise AccuracyError("Hamiltonian drift %.3e along the orbit" % drift)
    return PeriodicOrbit(
        level=float(level),
        period=period_len,
        samples=samples,
        area=_spectral_area(samples),
    )


def period(field: PotentialField, level: float) -> float:
    """Period of the closed orbit at the given level."""
    return trace_orbit(field, level, n_samples=64).period


def period_derivative(field: PotentialField, level: float) -> float:
    """dT/dlambda by Richardson-extrapolated central differences."""
    h = 1e-3 * abs(level) + 1e-4

    def central(hh):
        return (period(field, level + hh) - period(field, level - hh)) / (2.0 * hh)

    d1 = central(h)
    d2 = central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def period_at_critical(field: PotentialField) -> float:
    """Limit period at the critical point, 4 pi^2 / (gamma sqrt(a^2 - |b|^2)).

    Here a = (phi'(xi0))^2 and b = phi'''(xi0) / (2 phi'(xi0)).  Raises a
    non-elliptic error when a <= |b| (hyperbolic or degenerate point).
    """
    d1, _, d3 = field.map.phi_derivs(field.map.xi0)
    a = float(np.real(d1)) ** 2
    b = complex(d3) / (2.0 * complex(d1))
    if not a > abs(b):
        raise NonEllipticError(
            "critical point is not elliptic: a=%.6g <= |b|=%.6g" % (a, abs(b))
        )
    return 4.0 * math.pi ** 2 / (field.gamma * math.sqrt(a * a - abs(b) ** 2))


def boundary_period_asymptote(field: PotentialField, level: float) -> float:
    """Large-level period asymptote (2 pi L / gamma) exp(-4 pi level / gamma)."""
    L = field.map.boundary_length()
    return (2.0 * math.pi * L / field.gamma) * math.exp(
        -4.0 * math.pi * level / field.gamma
    )
