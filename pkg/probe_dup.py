import math
import time
import warnings

import numpy as np

from vortexdom.conformal import DiscMap, SectorMap
from vortexdom.contour import PatchState, _node_velocities, approx_solution
from vortexdom.duplication import (
    Reflection, _Motion, duplicate_patches, evolve_duplicated,
    green_identity_residual, reflect_point, sector_robin_image_sum,
    verify_duplicated_dynamics,
)
from vortexdom.greenrobin import PotentialField, robin
from vortexdom.pointvortex import trace_orbit

rng = np.random.default_rng(7)

# --- reflection basics ---------------------------------------------------
refl_re = Reflection(0.0, 1.0)
refl_im = Reflection(0.0, 1.0j)
pts = rng.standard_normal(100) + 1j * rng.standard_normal(100)
print("real-axis apply:", refl_re.apply(0.3 + 0.4j))
print("imag-axis apply:", refl_im.apply(0.3 + 0.4j))
print("involution err:", np.abs(refl_re.apply(refl_re.apply(pts)) - pts).max(),
      np.abs(refl_im.apply(refl_im.apply(pts)) - pts).max())
g = Reflection(1.0 + 1.0j, 2.0 + 2.0j)   # diagonal line
print("diag fixes line:", abs(g.apply(1.5 + 1.5j) - (1.5 + 1.5j)))
print("diag swaps:", g.apply(1.0), "(expect 1j)")

# motion composition
m = _Motion()
m1 = m.after_reflection(refl_re)
m21 = m1.after_reflection(refl_im)
x = pts[:5]
direct = refl_im.apply(refl_re.apply(x))
print("composition err:", np.abs(m21.apply(x) - direct).max(), "flips:", m21.flips)

# --- green identities ----------------------------------------------------
def sector_points(m_ord, n, margin=0.05):
    out = []
    while len(out) < n:
        z = rng.random() * np.exp(1j * rng.random() * math.pi / m_ord)
        smap = SectorMap(m_ord)
        if smap.contains(z) and smap.boundary_distance(z) > margin:
            out.append(z)
    return np.array(out)

half = PotentialField(SectorMap(1))
disc = PotentialField(DiscMap())
quad = PotentialField(SectorMap(2))

t0 = time.time()
x1, y1 = sector_points(1, 100), sector_points(1, 100)
for ident in ("first", "second", "symmetry"):
    r = green_identity_residual(half, disc, refl_re, (x1, y1), identity=ident)
    print("half-disc<->disc", ident, "%.3e" % r)
x2, y2 = sector_points(2, 100), sector_points(2, 100)
for ident in ("first", "second", "symmetry"):
    r = green_identity_residual(quad, half, refl_im, (x2, y2), identity=ident)
    print("quadrant<->half", ident, "%.3e" % r)
print("identities time %.2fs" % (time.time() - t0))

# margin-skip path
with warnings.catch_warnings(record=True) as wlog:
    warnings.simplefilter("always")
    xs = np.array([0.5 + 0.5j, 0.2 + 0.0000001j])
    ys = np.array([0.3 + 0.3j, 0.4 + 0.4j])
    r = green_identity_residual(half, disc, refl_re, (xs, ys))
    print("skip warn:", [str(w.message) for w in wlog], "res %.3e" % r)

# --- sector robin image sum ----------------------------------------------
for m_ord in (1, 2, 3):
    fld = PotentialField(SectorMap(m_ord))
    zz = sector_points(m_ord, 50)
    img = sector_robin_image_sum(m_ord, zz)
    direct = np.array([robin(fld, z) for z in zz])
    print("sector robin m=%d err %.3e" % (m_ord, np.abs(img - direct).max()))

# --- duplicate_patches ----------------------------------------------------
orbit_q = trace_orbit(quad, 0.1)
state_q = PatchState.circular(orbit_q, 0.04)
cfg4 = duplicate_patches(state_q, [refl_re, refl_im])
print("4-patch signs:", cfg4.signs, "domain:", cfg4.domain,
      "total circ:", cfg4.total_circulation())
areas = [np.abs(np.sum(np.conj(s) * np.roll(s, -1) - np.conj(np.roll(s, -1)) * s)) for s in cfg4.node_sets]
from vortexdom.contour import _polygon_area
print("orientations (areas, all should be +):",
      ["%.5f" % _polygon_area(s) for s in cfg4.node_sets])
print("empty:", duplicate_patches(None, [refl_re]).domain,
      len(duplicate_patches(None, [refl_re]).node_sets))

# crossing detection
orbit_h = trace_orbit(half, 0.1)
state_h = PatchState.circular(orbit_h, 0.05)
try:
    duplicate_patches(state_h, [Reflection(0.5j, 1.0 + 0.5j)])
    print("crossing: NOT raised (bad)")
except Exception as e:
    print("crossing raised:", type(e).__name__, str(e)[:60])

# --- velocity equivariance ------------------------------------------------
cfg2 = duplicate_patches(state_h, [refl_re])
om0 = state_h.gamma / (math.pi * state_h.eps ** 2)
us = _node_velocities(disc, list(cfg2.node_sets), [om0, -om0])
base_nodes = cfg2.node_sets[0]
mir_nodes = cfg2.node_sets[1]
d2 = refl_re.direction ** 2
# mirror nodes are reversed reflected base nodes
pred = d2 * np.conj(us[0])[::-1]
print("velocity equivariance err:", np.abs(us[1] - pred).max())

# --- evolve_duplicated: one step mirror ----------------------------------
orbit_h3 = trace_orbit(half, 0.3)
print("half-disc orbit levels: lam=0.1 min bdist %.4f, diam %.4f; lam=0.3 min bdist %.4f" % (
    SectorMap(1).boundary_distance(orbit_h.samples).min(), orbit_h.diameter(),
    SectorMap(1).boundary_distance(orbit_h3.samples).min()))
print("orbit period lam=0.1:", orbit_h.period)

t0 = time.time()
dev1 = verify_duplicated_dynamics(disc, cfg2, orbit_h.period / 4000, 1, n_nodes=64)
print("one-step mirror dev (N=64): %.3e  (%.2fs)" % (dev1, time.time() - t0))

t0 = time.time()
dev = verify_duplicated_dynamics(disc, cfg2, orbit_h.period / 4000, 40, n_nodes=64)
print("40-step mirror dev (N=64): %.3e  (%.2fs)" % (dev, time.time() - t0))
