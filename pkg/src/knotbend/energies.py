"""Willmore and Möbius energies of closed curves and their first variations."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bendfield import OPEN_FAMILY_TOL, refine_field, require_bending
from .curvegeom import GeometryError, _dot
from .quadrature import integrate_with_drift
from .variations import _delta_curvature, _parts

EMBED_TOL = 1e-6
ROW_BLOCK = 64


class SelfIntersectionError(GeometryError):
    """Two non-adjacent samples are closer than the embeddedness guard."""

    def __init__(self, i, j, chord):
        self.pair = (int(i), int(j))
        self.chord = float(chord)
        super().__init__("near-self-intersection", f"chord {chord:.3e} between samples {i} and {j}", int(i))


@dataclass(frozen=True)
class EnergyValue:
    kind: str
    value: float
    n: int
    refinement_delta: float


@dataclass(frozen=True)
class EnergyVariation:
    kind: str
    value: float
    interior: Optional[float] = None
    boundary: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# Willmore


def willmore(c, allow_open=False):
    """``W = 1/2 int k^2 ds`` by the periodic trapezoid rule.

    ``allow_open`` skips the closure check; the integrand only involves
    derivatives, which stay periodic for bent curves with an open field.
    """
    if not allow_open:
        c.require_closed()
    w = 0.5 * c.integrate_ds(c.k**2)
    integrand = c.k**2 * c.speed
    coarse = 0.5 * np.sum(integrand[::2]) * (2.0 * c.h)
    return EnergyValue("willmore", float(w), c.n, float(abs(w - coarse)))


def willmore_variation_direct(c, f):
    """``dW = int k dk ds``."""
    f = require_bending(c, f)
    dk = _delta_curvature(_parts(c, f))
    return EnergyVariation("willmore", float(c.integrate_ds(c.k * dk)))


def _interior_integrand(p):
    return (p.k2 + 0.5 * p.k**3 - p.k * p.tau**2) * p.z1 + (2.0 * p.k1 * p.tau + p.k * p.tau1) * p.z2


def _boundary_integrand(k, k1, tau, comp, dcomp):
    return 0.5 * k**2 * comp[0] - k1 * comp[1] + k * dcomp[1] - 2.0 * k * tau * comp[2]


def willmore_variation_theorem(c, f):
    """Variation of W after integration by parts.

    ``interior`` is ``int [(k'' + k^3/2 - k tau^2) z1 + (2 k' tau + k tau') z2] ds``;
    ``boundary`` is the jump of ``k^2 z/2 - k' z1 + k z1' - 2 k tau z2`` across
    the ends of the parameter range, which vanishes for closed fields.
    ``value`` is the interior term; ``interior + boundary`` equals the direct
    form for any field.
    """
    c.require_closed()
    f = require_bending(c, f)
    # the interior integrand multiplies several sharp factors, so it is
    # integrated on the refined grid when one is available
    fc, ff = refine_field(c, f)
    ff = require_bending(fc, ff)
    p = _parts(fc, ff)
    drift = _parts(fc, ff, ff.components.drift)
    interior = integrate_with_drift(
        _interior_integrand(p) * fc.speed, _interior_integrand(drift) * fc.speed, fc.param_period
    )
    k, k1 = c.kjet[0][0], c.kjet[1][0]
    tau = c.tau[0]
    start = _boundary_integrand(k, k1, tau, f.components.jets[0][0], f.components.jets[1][0])
    end_z, end_dz = f.components.end
    end = _boundary_integrand(k, k1, tau, end_z, end_dz)
    boundary = float(end - start)
    return EnergyVariation("willmore", float(interior), float(interior), boundary)


# --------------------------------------------------------------------------
# Möbius


def _check_embedded(c, rows):
    n = c.n
    gap = np.abs(rows[:, None] - np.arange(n)[None, :])
    gap = np.minimum(gap, n - gap)
    far = gap > n // 32
    chord = np.linalg.norm(c.r[rows, None, :] - c.r[None, :, :], axis=-1)
    masked = np.where(far, chord, np.inf)
    idx = np.unravel_index(np.argmin(masked), masked.shape)
    if masked[idx] < EMBED_TOL:
        raise SelfIntersectionError(rows[idx[0]], idx[1], masked[idx])


def _row_sums(c, rows, kernel, diagonal):
    sig = c.sigma[:-1]
    dr = c.r[rows, None, :] - c.r[None, :, :]
    own = rows[:, None] == np.arange(c.n)[None, :]
    dist2 = np.where(own, 1.0, _dot(dr, dr))
    arc = np.abs(sig[rows, None] - sig[None, :])
    arc = np.minimum(arc, c.length - arc)
    arc = np.where(own, 1.0, arc)
    weight = c.speed[rows, None] * c.speed[None, :]
    vals = kernel(rows, dr, dist2, arc) * weight
    vals[own] = diagonal[rows]
    return np.sum(vals, axis=1)


def _double_sum(c, kernel, diagonal, workers=None):
    """Trapezoid double sum over the sample grid.

    Rows are reduced in fixed-size blocks and the row sums combined with
    numpy's pairwise summation, so the result does not depend on
    ``workers``.
    """
    blocks = [np.arange(i, min(i + ROW_BLOCK, c.n)) for i in range(0, c.n, ROW_BLOCK)]
    job = lambda rows: _row_sums(c, rows, kernel, diagonal)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    return float(np.sum(np.concatenate(parts))) * c.h**2


def _mobius_kernel(rows, dr, dist2, arc):
    return 1.0 / dist2 - 1.0 / arc**2


def mobius(c, workers=None):
    """Möbius energy ``iint (1/|r(s)-r(t)|^2 - 1/l(s,t)^2) ds dt``.

    ``l`` is the shorter arc between the points, read from the arc-length
    table.  The diagonal uses the limit ``k^2/12`` of the integrand.
    """
    c.require_closed()
    for i in range(0, c.n, ROW_BLOCK):
        _check_embedded(c, np.arange(i, min(i + ROW_BLOCK, c.n)))
    diagonal = c.k**2 * c.speed**2 / 12.0
    value = _double_sum(c, _mobius_kernel, diagonal, workers)
    # every other sample: same rule on the half grid
    half = np.arange(0, c.n, 2)
    sig = c.sigma[half]
    dr = c.r[half, None, :] - c.r[None, half, :]
    own = np.eye(half.size, dtype=bool)
    dist2 = np.where(own, 1.0, _dot(dr, dr))
    arc = np.abs(sig[:, None] - sig[None, :])
    arc = np.where(own, 1.0, np.minimum(arc, c.length - arc))
    vals = (1.0 / dist2 - 1.0 / arc**2) * np.outer(c.speed[half], c.speed[half])
    vals[own] = diagonal[half]
    coarse = float(np.sum(vals)) * (2.0 * c.h) ** 2
    return EnergyValue("mobius", value, c.n, abs(value - coarse))


def mobius_variation_integrand(c, f, rows=None):
    """Rows of ``2 (r(t)-r(s)).(z(s)-z(t)) / |r(s)-r(t)|^4`` (off-diagonal only)."""
    rows = np.arange(c.n) if rows is None else np.asarray(rows)
    dr = c.r[None, :, :] - c.r[rows, None, :]
    dzv = f.z[rows, None, :] - f.z[None, :, :]
    d2 = _dot(dr, dr)
    own = rows[:, None] == np.arange(c.n)[None, :]
    d2 = np.where(own, 1.0, d2)
    out = 2.0 * _dot(dr, dzv) / d2**2
    out[own] = 0.0
    return out


def mobius_variation(c, f, workers=None):
    """First variation of the Möbius energy.

    Off the diagonal the integrand is ``2 (r(t)-r(s)).(z(s)-z(t)) / |r(s)-r(t)|^4``.
    On the diagonal it takes its limit ``k (n1 . z'') / 6``, the variation of
    the energy's own diagonal value ``k^2/12``.
    """
    c.require_closed()
    f = require_bending(c, f)
    if f.closure_defect > OPEN_FAMILY_TOL * c.length:
        raise GeometryError("not-closed", f"bending field does not close (defect {f.closure_defect:.3e})")
    zs = f.dz / c.speed[:, None]
    zss = c.ds(zs)
    diagonal = c.k * _dot(c.n1, zss) / 6.0 * c.speed**2

    def kernel(rows, dr, dist2, arc):
        dzv = f.z[rows, None, :] - f.z[None, :, :]
        return 2.0 * _dot(-dr, dzv) / dist2**2

    value = _double_sum(c, kernel, diagonal, workers)
    return EnergyVariation("mobius", value, diagnostics={"diagonal": float(np.sum(diagonal) * c.h**2)})
