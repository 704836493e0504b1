"""Reflection-based duplication of vortex-patch configurations.

A patch solution confined to a base cell extends to the doubled domain by
odd reflection: mirrored patches carry the opposite vorticity, the stream
function is antisymmetric across the reflection line, and the Green
functions of the cell and of the doubled domain differ by a single image
source.  This module builds mirrored configurations, checks the Green
identities numerically, sums disc images into sector Robin functions, and
evolves assembled multi-patch systems to verify the equivariance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._fourier import grid
from .contour import (
    PatchFrame,
    PatchState,
    _apply_mode_factor,
    _center_samples,
    _has_self_intersection,
    _kelvin_sigma,
    _node_velocities,
    _phi123,
    _pinned_rates,
    _polygon_area,
    _polygon_centroid,
    _trig_eval,
)
from .errors import DomainError, TopologyError
from .greenrobin import PotentialField, green

__all__ = [
    "MultiPatchConfig",
    "MultiPatchFrame",
    "PatchImage",
    "Reflection",
    "duplicate_patches",
    "evolve_duplicated",
    "green_identity_residual",
    "reflect_point",
    "sector_robin_image_sum",
    "verify_duplicated_dynamics",
]

# fraction of the domain diameter treated as "too close to the boundary"
# when sampling Green identities
IDENTITY_MARGIN = 1e-6


# ----------------------------------------------------------------------
# reflections and rigid motions


@dataclass(frozen=True)
class Reflection:
    """Orthogonal reflection across the line through two points.

    With unit direction ``d = (w - z)/|w - z|`` the map is
    ``S(x) = z + d^2 conj(x - z)``: an involutive isometry fixing the
    whole line, independent of the choice of the two points on it.

    Parameters
    ----------
    z, w : complex
        Distinct points spanning the reflection line.
    """

    z: complex
    w: complex

    def __post_init__(self):
        if not abs(complex(self.w) - complex(self.z)) > 0.0:
            raise DomainError("reflection segment is degenerate")

    @property
    def direction(self) -> complex:
        d = complex(self.w) - complex(self.z)
        return d / abs(d)

    def apply(self, x):
        d2 = self.direction ** 2
        out = complex(self.z) + d2 * np.conj(np.asarray(x) - complex(self.z))
        return complex(out) if np.ndim(x) == 0 else out

    def line_offset(self, x):
        """Signed distance from the reflection line, positive on its left."""
        rel = (np.asarray(x) - complex(self.z)) * np.conj(self.direction)
        off = rel.imag
        return float(off) if np.ndim(x) == 0 else off


def reflect_point(refl: Reflection, x):
    """Reflect x (scalar or array) across the line of ``refl``."""
    return refl.apply(x)


@dataclass(frozen=True)
class _Motion:
    """Composition of reflections: a rigid motion of the plane.

    Acts as ``mult * x + shift`` for an even number of reflections and
    ``mult * conj(x) + shift`` for an odd number; ``mult`` is unimodular.
    """

    mult: complex = 1.0 + 0.0j
    shift: complex = 0.0 + 0.0j
    flips: int = 0

    def apply(self, x):
        arg = np.conj(x) if self.flips % 2 else np.asarray(x)
        out = self.mult * arg + self.shift
        return complex(out) if np.ndim(x) == 0 else out

    def after_reflection(self, refl: Reflection) -> "_Motion":
        d2 = refl.direction ** 2
        b = complex(refl.z) - d2 * np.conj(complex(refl.z))
        # S(m(x)) with S(y) = d2 conj(y) + b
        return _Motion(
            mult=d2 * np.conj(self.mult),
            shift=d2 * np.conj(self.shift) + b,
            flips=self.flips + 1,
        )


@dataclass(frozen=True)
class PatchImage:
    """One mirrored copy: vorticity sign and the rigid motion from the base."""

    sign: int
    motion: _Motion


# ----------------------------------------------------------------------
# configuration assembly


@dataclass(frozen=True)
class MultiPatchConfig:
    """Signed mirrored copies of one base patch at a common time.

    Parameters
    ----------
    base : PatchState or None
        The generating state; None for configurations assembled from
        bare trajectory frames.
    images : tuple of PatchImage
        Sign and motion per copy; the first entry is the identity.
    node_sets : tuple of ndarray
        Boundary nodes per copy, all counterclockwise.
    domain : str
        Descriptor of the assembled domain.
    t : float
        Time of the slice.
    """

    base: PatchState | None
    images: tuple[PatchImage, ...]
    node_sets: tuple[NDArray[np.complex128], ...]
    domain: str
    t: float = 0.0

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(im.sign for im in self.images)

    def total_circulation(self) -> float:
        gamma = self.base.gamma if self.base is not None else math.pi
        return gamma * float(sum(self.signs))


def _polygon_gap(a: NDArray[np.complex128], b: NDArray[np.complex128]) -> float:
    """Smallest point-to-segment distance between two closed polygons."""

    def directed(p, q):
        d = np.roll(q, -1) - q
        t = ((p[:, None] - q[None, :]) * np.conj(d[None, :])).real
        t = np.clip(t / np.abs(d[None, :]) ** 2, 0.0, 1.0)
        proj = q[None, :] + t * d[None, :]
        return float(np.abs(p[:, None] - proj).min())

    return min(directed(a, b), directed(b, a))


def _assemble(nodes: NDArray[np.complex128], reflections,
              base: PatchState | None, t: float) -> MultiPatchConfig:
    images = [PatchImage(sign=1, motion=_Motion())]
    for refl in reflections:
        off = refl.line_offset(nodes)
        if off.max() >= 0.0 > off.min() or np.abs(off).min() == 0.0:
            raise DomainError(
                "base patch crosses the reflection line through "
                "%s and %s" % (refl.z, refl.w))
        images.extend(
            PatchImage(sign=-im.sign, motion=im.motion.after_reflection(refl))
            for im in list(images))
    sets = []
    for im in images:
        pts = im.motion.apply(nodes)
        if im.motion.flips % 2:
            pts = pts[::-1]  # reflections reverse the orientation
        sets.append(pts)
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if _polygon_gap(sets[i], sets[j]) <= 0.0:
                raise DomainError(
                    "mirrored patches %d and %d are not disjoint" % (i, j))
    label = "base cell doubled %d time(s)" % len(tuple(reflections))
    return MultiPatchConfig(base=base, images=tuple(images),
                            node_sets=tuple(sets), domain=label, t=t)


def duplicate_patches(config_base, reflections):
    """Mirror a base patch (or trajectory) across reflection lines.

    Each reflection doubles the configuration, flipping the vorticity
    sign of every new copy, so two axis reflections of a quadrant patch
    produce the four-patch disc arrangement with signs +, -, -, +.

    Parameters
    ----------
    config_base : PatchState, sequence of PatchFrame, or None
        The base-cell solution.  A frame sequence yields one config per
        frame; None (or an empty sequence) yields an empty configuration.
    reflections : sequence of Reflection

    Returns
    -------
    MultiPatchConfig or list of MultiPatchConfig

    Raises
    ------
    DomainError
        The base patch crosses a reflection line, or two mirrored
        copies fail to be disjoint.
    """
    reflections = tuple(reflections)
    if config_base is None:
        return MultiPatchConfig(base=None, images=(), node_sets=(),
                                domain="empty", t=0.0)
    if isinstance(config_base, PatchState):
        nodes = config_base.boundary_nodes()
        return _assemble(nodes, reflections, config_base, 0.0)
    frames = list(config_base)
    if not frames:
        return MultiPatchConfig(base=None, images=(), node_sets=(),
                                domain="empty", t=0.0)
    return [_assemble(np.asarray(f.nodes, dtype=complex), reflections,
                      None, f.t) for f in frames]


# ----------------------------------------------------------------------
# Green-function identities


def green_identity_residual(field_d: PotentialField,
                            field_dstar: PotentialField,
                            refl: Reflection, samples,
                            identity: str = "first",
                            margin: float = IDENTITY_MARGIN) -> float:
    """Worst residual of a doubling identity over sample pairs.

    With S the reflection gluing the cell D into the doubled domain
    D*, the identities checked are, for x, y interior to D,

    - ``first``:    G*(x, y) - G*(x, S y) - G_D(x, y)
    - ``second``:   G*(S x, y) - G*(S x, S y) + G_D(x, y)
    - ``symmetry``: G*(S x, S y) - G*(x, y)

    Parameters
    ----------
    field_d, field_dstar : PotentialField
        Cell and doubled domain.
    refl : Reflection
    samples : tuple (x, y) of complex arrays
        Interior points of the cell, paired elementwise.
    identity : str, optional
    margin : float, optional
        Pairs with either point closer to a boundary than this fraction
        of the domain diameter are skipped (and the count reported).

    Returns
    -------
    float
        Max abs residual over the retained pairs.

    Raises
    ------
    DomainError
        Unknown identity name, or every pair was skipped.
    """
    if identity not in ("first", "second", "symmetry"):
        raise DomainError("unknown identity %r" % identity)
    x = np.atleast_1d(np.asarray(samples[0], dtype=complex))
    y = np.atleast_1d(np.asarray(samples[1], dtype=complex))
    if x.shape != y.shape:
        raise DomainError("sample arrays must have matching shapes")
    sx, sy = refl.apply(x), refl.apply(y)

    cut_d = margin * field_d.map.diameter()
    cut_s = margin * field_dstar.map.diameter()
    keep = (
        (np.atleast_1d(field_d.map.boundary_distance(x)) > cut_d)
        & (np.atleast_1d(field_d.map.boundary_distance(y)) > cut_d)
        & (np.atleast_1d(field_dstar.map.boundary_distance(x)) > cut_s)
        & (np.atleast_1d(field_dstar.map.boundary_distance(y)) > cut_s)
        & (np.abs(x - y) > cut_d)
        & (np.abs(x - sy) > cut_s)
    )
    skipped = int((~keep).sum())
    if skipped:
        warnings.warn("skipped %d near-boundary sample pair(s)" % skipped,
                      stacklevel=2)
    if not keep.any():
        raise DomainError("every sample pair fell inside the boundary margin")
    x, y, sx, sy = x[keep], y[keep], sx[keep], sy[keep]

    if identity == "first":
        res = (green(field_dstar, x, y) - green(field_dstar, x, sy)
               - green(field_d, x, y))
    elif identity == "second":
        res = (green(field_dstar, sx, y) - green(field_dstar, sx, sy)
               + green(field_d, x, y))
    else:
        res = green(field_dstar, sx, sy) - green(field_dstar, x, y)
    return float(np.abs(res).max())


def _disc_green(a, b):
    return np.log(np.abs(a - b)) - np.log(np.abs(1.0 - a * np.conj(b)))


def sector_robin_image_sum(m: int, z):
    """Robin function of the unit-disc sector 0 < arg z < pi/m by images.

    The dihedral reflections of the sector tile the disc, so the sector
    Green function is the alternating sum of disc Green functions over
    the rotated sources and their conjugate mirrors; removing the
    logarithmic diagonal leaves the disc Robin term plus the image sum

    ``R(z) = -log(1 - |z|^2) + sum_{j>0} G(z, e_j z) - sum_j G(z, e_j conj z)``

    with ``e_j = exp(2 pi i j / m)``.

    Parameters
    ----------
    m : int
        Sector order, m >= 1.
    z : complex or ndarray
        Interior points of the sector.

    Returns
    -------
    float or ndarray
    """
    if int(m) != m or m < 1:
        raise DomainError("sector order must be an integer m >= 1")
    m = int(m)
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    ang = np.angle(pts)
    if not np.all((np.abs(pts) < 1.0) & (ang > 0.0) & (ang < math.pi / m)):
        raise DomainError("points must lie inside the open sector")
    val = -np.log(1.0 - np.abs(pts) ** 2)
    for j in range(1, m):
        rot = np.exp(2j * math.pi * j / m)
        val = val + _disc_green(pts, rot * pts)
    for j in range(m):
        rot = np.exp(2j * math.pi * j / m)
        val = val - _disc_green(pts, rot * np.conj(pts))
    return float(val[0]) if np.ndim(z) == 0 else val


# ----------------------------------------------------------------------
# multi-patch evolution


@dataclass(frozen=True)
class MultiPatchFrame:
    """One snapshot of a multi-patch evolution."""

    t: float
    node_sets: tuple[NDArray[np.complex128], ...]
    areas: tuple[float, ...]
    centroids: tuple[complex, ...]


def _image_polar(base_rho: NDArray[np.float64], motion: _Motion,
                 th: NDArray[np.float64]):
    """Radius field of a mirrored copy on the uniform polar grid.

    A rigid motion sends rays to rays, so the copy is star-shaped about
    the moved center with radius ``rho(theta - arg mult)`` for an even
    motion and ``rho(arg mult - theta)`` for an odd one.
    """
    alpha = math.atan2(motion.mult.imag, motion.mult.real)
    if motion.flips % 2:
        return _trig_eval(base_rho, np.mod(alpha - th, 2.0 * math.pi))
    return _trig_eval(base_rho, np.mod(th - alpha, 2.0 * math.pi))


def evolve_duplicated(field: PotentialField, config: MultiPatchConfig,
                      dt: float, steps: int, n_nodes: int | None = None,
                      intersection_every: int = 25, image_rings: int = 8,
                      image_sectors: int = 64):
    """Evolve a duplicated configuration by multi-patch contour dynamics.

    Every copy is tracked in its own patch-polar variables exactly as in
    ``contour.evolve_patch``; the boundary velocities couple all copies
    through one signed sum of boundary integrals plus the domain
    feedback, and each copy's self-induced wave phases (whose rates
    follow the sign of its vorticity) are propagated exactly inside the
    same fourth-order exponential scheme.

    Parameters
    ----------
    field : PotentialField
        The assembled domain.
    config : MultiPatchConfig
        Must be state-backed (built from a PatchState) so the copies
        inherit a consistent polar parametrization.
    dt, steps, n_nodes, intersection_every, image_rings, image_sectors
        As in ``contour.evolve_patch``.

    Returns
    -------
    list of MultiPatchFrame

    Raises
    ------
    DomainError
        Config not state-backed, or a node left the domain.
    TopologyError
        A copy self-intersected or stopped being star-shaped.
    """
    if config.base is None:
        raise DomainError("evolution needs a state-backed configuration")
    if not config.images:
        raise DomainError("configuration holds no patches")
    state = config.base
    base_nodes = state.boundary_nodes(n_nodes)
    n = base_nodes.shape[0]
    th = grid(n)
    expi = np.exp(1j * th)
    emti = np.exp(-1j * th)
    c0 = complex(_center_samples(state.orbit, state.n_phi)[0])
    base_rho = np.abs(base_nodes - c0)

    m = len(config.images)
    omega0 = state.gamma / (math.pi * state.eps ** 2)
    omegas = [im.sign * omega0 for im in config.images]
    cs = [im.motion.apply(c0) for im in config.images]
    rhos = [_image_polar(base_rho, im.motion, th) for im in config.images]

    weights = []
    for om in omegas:
        y = -_kelvin_sigma(n, om) * dt
        p1h, _, _ = _phi123(0.5 * y)
        p1, p2, p3 = _phi123(y)
        weights.append({
            "e_full": np.exp(1j * y),
            "e_half": np.exp(0.5j * y),
            "q_half": (0.5 * dt) * p1h,
            "w1": dt * (p1 - 3.0 * p2 + 4.0 * p3),
            "w23": dt * (2.0 * p2 - 4.0 * p3),
            "w4": dt * (4.0 * p3 - p2),
            "rate": -1j * _kelvin_sigma(n, om),
        })

    def slow(rhos_s, cs_s):
        sets = [cs_s[i] + rhos_s[i] * expi for i in range(m)]
        us = _node_velocities(field, sets, omegas, rings=image_rings,
                              sectors=image_sectors)
        out_r, out_c = [], []
        for i in range(m):
            drho, dc = _pinned_rates(us[i], rhos_s[i], expi, emti)
            out_r.append(drho - _apply_mode_factor(rhos_s[i],
                                                   weights[i]["rate"]))
            out_c.append(dc)
        return out_r, out_c

    def frame(t, sets):
        return MultiPatchFrame(
            t=t, node_sets=tuple(s.copy() for s in sets),
            areas=tuple(_polygon_area(s) for s in sets),
            centroids=tuple(_polygon_centroid(s) for s in sets))

    sets = [cs[i] + rhos[i] * expi for i in range(m)]
    for s in sets:
        if not np.all(field.map.contains(s)):
            raise DomainError("initial configuration leaves the domain")
    frames = [frame(0.0, sets)]
    for k in range(1, steps + 1):
        n1r, n1c = slow(rhos, cs)
        rho_h = [_apply_mode_factor(rhos[i], weights[i]["e_half"])
                 for i in range(m)]
        ar = [rho_h[i] + _apply_mode_factor(n1r[i], weights[i]["q_half"])
              for i in range(m)]
        ac = [cs[i] + 0.5 * dt * n1c[i] for i in range(m)]
        n2r, n2c = slow(ar, ac)
        br = [rho_h[i] + _apply_mode_factor(n2r[i], weights[i]["q_half"])
              for i in range(m)]
        bc = [cs[i] + 0.5 * dt * n2c[i] for i in range(m)]
        n3r, n3c = slow(br, bc)
        cr = [_apply_mode_factor(ar[i], weights[i]["e_half"])
              + _apply_mode_factor(2.0 * n3r[i] - n1r[i],
                                   weights[i]["q_half"])
              for i in range(m)]
        cc = [ac[i] + 0.5 * dt * (2.0 * n3c[i] - n1c[i]) for i in range(m)]
        n4r, n4c = slow(cr, cc)
        for i in range(m):
            w = weights[i]
            rhos[i] = (_apply_mode_factor(rhos[i], w["e_full"])
                       + _apply_mode_factor(n1r[i], w["w1"])
                       + _apply_mode_factor(n2r[i] + n3r[i], w["w23"])
                       + _apply_mode_factor(n4r[i], w["w4"]))
            cs[i] = cs[i] + (dt / 6.0) * (n1c[i] + 2.0 * (n2c[i] + n3c[i])
                                          + n4c[i])
            if not np.all(rhos[i] > 0.0):
                raise TopologyError(
                    "patch %d stopped being star-shaped at step %d" % (i, k))
        sets = [cs[i] + rhos[i] * expi for i in range(m)]
        for i, s in enumerate(sets):
            if not np.all(field.map.contains(s)):
                raise DomainError(
                    "patch %d left the domain at step %d" % (i, k))
            if (intersection_every and k % intersection_every == 0
                    or k == steps) and _has_self_intersection(s):
                raise TopologyError(
                    "patch %d self-intersected at step %d" % (i, k))
        frames.append(frame(k * dt, sets))
    return frames


def _dense_curve(nodes: NDArray[np.complex128], factor: int = 4):
    n = nodes.size
    c = np.fft.fft(nodes)
    out = np.zeros(factor * n, dtype=complex)
    out[: n // 2] = c[: n // 2]
    out[-(n // 2):] = c[-(n // 2):]
    return np.fft.ifft(out) * factor


def _curve_deviation(a: NDArray[np.complex128],
                     b: NDArray[np.complex128]) -> float:
    """Symmetric max point-to-segment distance between closed curves."""
    p, q = _dense_curve(a), _dense_curve(b)

    def directed(p, q):
        d = np.roll(q, -1) - q
        t = ((p[:, None] - q[None, :]) * np.conj(d[None, :])).real
        t = np.clip(t / np.abs(d[None, :]) ** 2, 0.0, 1.0)
        proj = q[None, :] + t * d[None, :]
        return float(np.abs(p[:, None] - proj).min(axis=1).max())

    return max(directed(p, q), directed(q, p))


def verify_duplicated_dynamics(field_dstar: PotentialField,
                               config: MultiPatchConfig, dt: float,
                               steps: int, n_nodes: int | None = None,
                               check_every: int = 10, **kwargs) -> float:
    """Equivariance defect of an evolved duplicated configuration.

    Evolves all copies together in the doubled domain and measures how
    far each mirrored copy drifts from the rigid image of the evolved
    base copy; for the exact dynamics the two coincide because the
    signed velocity field is antisymmetric under the reflections.

    Parameters
    ----------
    field_dstar : PotentialField
        The assembled domain.
    config : MultiPatchConfig
    dt, steps, n_nodes
        As in ``evolve_duplicated``; extra keywords pass through.
    check_every : int, optional
        Frame cadence of the deviation measurement (the final frame is
        always included).

    Returns
    -------
    float
        Max curve deviation over measured frames and mirrored copies.
    """
    frames = evolve_duplicated(field_dstar, config, dt, steps,
                               n_nodes=n_nodes, **kwargs)
    dev = 0.0
    for k, fr in enumerate(frames):
        if not (k % max(check_every, 1) == 0 or k == len(frames) - 1):
            continue
        base = fr.node_sets[0]
        for i, im in enumerate(config.images):
            if i == 0:
                continue
            predicted = im.motion.apply(base)
            dev = max(dev, _curve_deviation(fr.node_sets[i], predicted))
    return dev
