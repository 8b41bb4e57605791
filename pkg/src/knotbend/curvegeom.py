"""Sampled space curves and their Frenet apparatus.

A :class:`SampledCurve` holds positions and the first three derivatives with
respect to its *grid parameter*, which is the original parameter ``u`` for
curves produced by :func:`sample_curve` and the arc length ``s`` for curves
produced by :func:`resample_by_arclength`.  Curvature, torsion and the frame
are parameter-invariant and are computed the same way in both cases.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import exprlang
from .quadrature import cumulative_simpson, periodic_derivative, periodic_trapezoid, simpson_weights

BIREGULAR_FLOOR = 1e-9
CLOSURE_TOL = 1e-8
ARC_PANELS = 8
JET_OVERSAMPLE = 8


class GeometryError(ValueError):
    """The curve does not support the requested geometry.

    ``kind`` is one of ``"non-biregular"``, ``"curvature-vanishes"``,
    ``"domain"`` or ``"not-closed"``.
    """

    def __init__(self, kind, message, index=None, value=None):
        self.kind = kind
        self.index = index
        self.value = value
        where = f" at sample {index}" if index is not None else ""
        super().__init__(f"{kind}: {message}{where}")


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _norm(a):
    return np.sqrt(_dot(a, a))


class Frame(NamedTuple):
    speed: np.ndarray
    k: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    n1: np.ndarray
    n2: np.ndarray


def frenet_apparatus(d1, d2, d3):
    """Speed, curvature, torsion and Frenet frame from parameter derivatives.

    ``n1`` and ``n2`` follow the explicit formulas in terms of the first and
    second derivative, so they are right-handed with ``n2 = t x n1``.
    Raises :class:`GeometryError` where the speed or ``|d1 x d2|`` drops
    below the biregularity floor.
    """
    speed = _norm(d1)
    w = np.cross(d1, d2)
    wn = _norm(w)
    bad = np.flatnonzero(speed < BIREGULAR_FLOOR)
    if bad.size:
        raise GeometryError("non-biregular", "tangent vanishes", int(bad[0]), float(speed[bad[0]]))
    bad = np.flatnonzero(wn < BIREGULAR_FLOOR)
    if bad.size:
        raise GeometryError(
            "non-biregular", "first and second derivative are parallel", int(bad[0]), float(wn[bad[0]])
        )
    k = wn / speed**3
    tau = _dot(w, d3) / wn**2
    t = d1 / speed[..., None]
    n1 = (_dot(d1, d1)[..., None] * d2 - _dot(d1, d2)[..., None] * d1) / (speed * wn)[..., None]
    n2 = w / wn[..., None]
    return Frame(speed, k, tau, t, n1, n2)


@dataclass(frozen=True)
class CurveDefinition:
    """Parametric curve ``(x(u), y(u), z(u))`` for ``u`` in ``[0, period)``."""

    x: exprlang.Expression
    y: exprlang.Expression
    z: exprlang.Expression
    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @classmethod
    def from_strings(cls, x, y, z, period="2*pi"):
        if isinstance(period, str):
            period = exprlang.constant_value(exprlang.parse(period))
        return cls(exprlang.parse(x), exprlang.parse(y), exprlang.parse(z), float(period))

    @cached_property
    def _derivative_exprs(self):
        return [exprlang.derivatives(e, 3) for e in (self.x, self.y, self.z)]

    def derivatives(self, u, order=3):
        """``[r, r', ..., r^(order)]`` at ``u``, each of shape ``u.shape + (3,)``."""
        u = np.asarray(u, dtype=float)
        out = []
        try:
            for m in range(order + 1):
                out.append(
                    np.stack([exprlang.evaluate(comp[m], u) for comp in self._derivative_exprs], axis=-1)
                )
        except exprlang.DomainError as exc:
            raise GeometryError("domain", str(exc)) from exc
        return out

    def speed(self, u):
        return _norm(self.derivatives(u, 1)[1])

    def frame(self, u):
        _, d1, d2, d3 = self.derivatives(u, 3)
        try:
            return frenet_apparatus(d1, d2, d3)
        except GeometryError as exc:
            raise GeometryError("curvature-vanishes", str(exc), exc.index, exc.value) from exc

    def arc_between(self, a, b, panels=ARC_PANELS):
        """Arc length from ``a`` to ``b`` (elementwise arrays)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        frac = np.linspace(0.0, 1.0, 2 * panels + 1)
        nodes = a[..., None] + (b - a)[..., None] * frac
        v = self.speed(nodes)
        return (v @ simpson_weights(panels)) * (b - a)


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """A closed-parameter-range curve sampled on a uniform grid.

    ``d1, d2, d3`` are derivatives with respect to the grid parameter, whose
    range is ``param_period``.  ``sigma`` is the cumulative arc length with
    ``N + 1`` entries (``sigma[N] == length``), and ``end_position`` is the
    position at the end of the parameter range.
    """

    u: np.ndarray
    param_period: float
    r: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    sigma: np.ndarray
    end_position: np.ndarray
    arclength: bool = False
    definition: Optional[CurveDefinition] = field(default=None, repr=False)
    oversample: int = JET_OVERSAMPLE

    def __post_init__(self):
        frame = frenet_apparatus(self.d1, self.d2, self.d3)
        for name, value in frame._asdict().items():
            object.__setattr__(self, name, value)
        if np.any(np.diff(self.sigma) <= 0):
            raise GeometryError("non-biregular", "arc length is not strictly increasing")

    @property
    def n(self):
        return self.r.shape[0]

    @property
    def h(self):
        return self.param_period / self.n

    @property
    def length(self):
        return float(self.sigma[-1])

    @property
    def closure_gap(self):
        return float(_norm(self.end_position - self.r[0]))

    def is_closed(self, tol=CLOSURE_TOL):
        return self.closure_gap <= tol

    def require_closed(self, tol=CLOSURE_TOL):
        if not self.is_closed(tol):
            raise GeometryError("not-closed", f"endpoints differ by {self.closure_gap:.3e}")

    def require_arclength(self):
        if not self.arclength:
            raise ValueError("this operation needs a curve resampled by arc length")

    @property
    def grid(self):
        """Grid parameter values of the samples."""
        return np.arange(self.n) * self.h

    def grid_derivative(self, values, order=1, method="spectral"):
        """Derivative of periodic samples with respect to the grid parameter."""
        return periodic_derivative(values, self.param_period, order, method)

    def ds(self, values, order=1, method="spectral"):
        """Arc-length derivative of periodic samples: ``(1/|r_p|) d/dp``, ``order`` times."""
        out = np.asarray(values, dtype=float)
        inv = 1.0 / self.speed
        inv = inv.reshape((-1,) + (1,) * (out.ndim - 1))
        for _ in range(order):
            out = inv * periodic_derivative(out, self.param_period, 1, method)
        return out

    def integrate_ds(self, values):
        """Periodic trapezoid of ``values`` against the line element."""
        values = np.asarray(values, dtype=float)
        w = self.speed.reshape((-1,) + (1,) * (values.ndim - 1))
        return periodic_trapezoid(values * w, self.param_period)

    @cached_property
    def refined(self):
        """The same curve on a grid ``oversample`` times finer, or ``None``.

        Only available for u-grid curves that carry their definition.  Jets
        of curvature, torsion and field components are differentiated there
        and read back at the coarse samples, which matters for curves whose
        curvature varies over orders of magnitude.
        """
        if self.definition is None or self.arclength or self.oversample <= 1:
            return None
        return sample_curve(self.definition, self.n * self.oversample, oversample=1)

    def fine_jet(self, func, order):
        """Arc-length jet of ``func(curve)`` at the samples, using :attr:`refined`."""
        fine = self.refined
        if fine is None:
            return _arc_jet(self, func(self), order)
        return tuple(a[:: self.oversample] for a in _arc_jet(fine, func(fine), order))

    @cached_property
    def kjet(self):
        """Curvature and its first three arc-length derivatives."""
        return self.fine_jet(lambda c: c.k, 3)

    @cached_property
    def taujet(self):
        """Torsion and its first three arc-length derivatives."""
        return self.fine_jet(lambda c: c.tau, 3)


def frenet_residuals(c, method="spectral"):
    """Largest residuals of the three Frenet equations.

    Returns ``(|t' - k n1|, |n1' + k t - tau n2|, |n2' + tau n1|)`` maxima,
    with the frame differentiated numerically by ``method`` (see
    :func:`knotbend.quadrature.periodic_derivative`).  Needs a frame that is
    periodic on the grid.
    """
    k = c.k[:, None]
    tau = c.tau[:, None]
    r1 = c.ds(c.t, method=method) - k * c.n1
    r2 = c.ds(c.n1, method=method) + k * c.t - tau * c.n2
    r3 = c.ds(c.n2, method=method) + tau * c.n1
    return tuple(float(np.max(_norm(r))) for r in (r1, r2, r3))


def _arc_jet(c, values, order):
    out = [values]
    for _ in range(order):
        out.append(c.ds(out[-1]))
    return tuple(out)


def sample_curve(definition, n=512, oversample=JET_OVERSAMPLE):
    """Sample ``definition`` at ``u_i = i * period / n``.

    Derivatives come from symbolic differentiation; arc length from composite
    Simpson of the speed.
    """
    if n < 32 or n % 2:
        raise ValueError(f"sample count must be even and >= 32, got {n}")
    period = definition.period
    u = np.arange(n) * (period / n)
    r, d1, d2, d3 = definition.derivatives(u, 3)
    breaks = np.linspace(0.0, period, n + 1)
    sigma = cumulative_simpson(definition.speed, breaks, panels=ARC_PANELS)
    end = definition.derivatives(np.array([period]), 0)[0][0]
    return SampledCurve(u, period, r, d1, d2, d3, sigma, end, False, definition, oversample)


def curvature(c, i):
    return float(c.k[i])


def torsion(c, i):
    return float(c.tau[i])


def frenet_frame(c, i):
    """``(t, n1, n2)`` at sample ``i``."""
    return c.t[i].copy(), c.n1[i].copy(), c.n2[i].copy()


def _invert_arclength(definition, u_grid, sigma, targets, iterations=6):
    guess = PchipInterpolator(sigma, np.append(u_grid, definition.period))(targets)
    breaks = np.append(u_grid, definition.period)
    for _ in range(iterations):
        idx = np.clip(np.searchsorted(breaks, guess, side="right") - 1, 0, len(u_grid) - 1)
        residual = sigma[idx] + definition.arc_between(breaks[idx], guess) - targets
        guess = guess - residual / definition.speed(guess)
    return guess


def resample_by_arclength(c, m=512):
    """Resample ``c`` at ``m`` points equally spaced in arc length.

    The inverse of the arc-length table starts from monotone cubic
    interpolation and is polished by Newton steps on the exact arc-length
    integral.  The result stores derivatives with respect to ``s``.
    """
    if m < 32 or m % 2:
        raise ValueError(f"sample count must be even and >= 32, got {m}")
    definition = c.definition
    if definition is None:
        raise ValueError("resampling needs a curve that carries its definition")
    if c.arclength:
        c = sample_curve(definition, c.n)
    length = c.length
    s = np.arange(m) * (length / m)
    u = _invert_arclength(definition, c.u, c.sigma, s)
    u[0] = 0.0
    r, ru1, ru2, ru3 = definition.derivatives(u, 3)
    v = _norm(ru1)
    v1 = _dot(ru1, ru2) / v
    v2 = (_dot(ru2, ru2) + _dot(ru1, ru3) - v1**2) / v
    # derivatives of u(s)
    us1 = 1.0 / v
    us2 = -v1 / v**3
    us3 = (3.0 * v1**2 - v * v2) / v**5
    col = lambda a: a[:, None]
    d1 = ru1 * col(us1)
    d2 = ru2 * col(us1**2) + ru1 * col(us2)
    d3 = ru3 * col(us1**3) + 3.0 * ru2 * col(us1 * us2) + ru1 * col(us3)
    sigma = np.append(s, length)
    return SampledCurve(u, length, r, d1, d2, d3, sigma, c.end_position.copy(), True, definition)


def arclength_defect(c):
    """Largest relative deviation of the true sample spacing from ``L / N``."""
    c.require_arclength()
    u_next = np.append(c.u[1:], c.definition.period)
    arcs = c.definition.arc_between(c.u, u_next)
    return float(np.max(np.abs(arcs / c.h - 1.0)))


def arc_distance(c, i, j):
    """Length of the shorter arc between samples ``i`` and ``j``."""
    d = abs(float(c.sigma[i] - c.sigma[j]))
    return min(d, c.length - d)


def arc_distance_matrix(c, rows=None):
    sig = c.sigma[:-1]
    rows = np.arange(c.n) if rows is None else rows
    d = np.abs(sig[rows, None] - sig[None, :])
    return np.minimum(d, c.length - d)
