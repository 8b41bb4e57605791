"""Infinitesimal bending fields along sampled curves.

A field is built by integrating a vector integrand that lies in the normal
plane of the curve, e.g. ``p(u) n1(u) + q(u) n2(u)``.  The integrand is kept
exactly at the samples (``dz``); only ``z`` itself goes through quadrature.
Integration never forces ``z`` to close up: the end value is carried along
and the closure defect is reported.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import exprlang
from .curvegeom import CurveDefinition, GeometryError, SampledCurve, _dot, _norm
from .quadrature import cumulative_simpson, periodic_cumulative, periodic_derivative

BENDING_TOL = 1e-8
OPEN_FAMILY_TOL = 1e-6


class NotBendingFieldError(ValueError):
    """The field fails the infinitesimal bending condition."""


@dataclass(frozen=True)
class FieldRecipe:
    """Coefficients of a bending field.

    Give either ``p, q`` (normal/binormal coefficients) or ``P1, P2, Q``
    (coefficients of ``r'``, ``r''`` and ``r' x r''``).  Missing coefficients
    of the chosen variant are zero.
    """

    p: Optional[exprlang.Expression] = None
    q: Optional[exprlang.Expression] = None
    P1: Optional[exprlang.Expression] = None
    P2: Optional[exprlang.Expression] = None
    Q: Optional[exprlang.Expression] = None
    z0: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        pq = self.p is not None or self.q is not None
        general = any(e is not None for e in (self.P1, self.P2, self.Q))
        if pq and general:
            raise ValueError("give either p, q or P1, P2, Q, not both")
        object.__setattr__(self, "z0", tuple(float(v) for v in self.z0))
        if len(self.z0) != 3:
            raise ValueError("z0 needs three components")

    @property
    def variant(self):
        return "general" if any(e is not None for e in (self.P1, self.P2, self.Q)) else "pq"

    @classmethod
    def from_strings(cls, z0=(0.0, 0.0, 0.0), **coefficients):
        parsed = {k: exprlang.parse(v) for k, v in coefficients.items() if v is not None}
        return cls(z0=z0, **parsed)


@dataclass(frozen=True, eq=False)
class FieldComponents:
    """Frenet components of a field and their arc-length derivatives.

    Column 0 is the tangential component ``z``, columns 1 and 2 the normal
    and binormal components ``z1`` and ``z2``.  ``drift`` holds the same
    jets for the constant field equal to the closure vector; it is zero for
    closed fields and lets integrals of non-periodic expressions be done
    exactly (see :func:`knotbend.quadrature.integrate_with_drift`).
    """

    jets: tuple
    drift: tuple
    end: tuple
    theorem_residual: float
    theorem_tol: float

    @property
    def valid(self):
        return self.theorem_residual <= self.theorem_tol


@dataclass(frozen=True, eq=False)
class BendingField:
    """Samples of a bending field on a given curve.

    ``z`` are positions of the field, ``dz`` its derivative with respect to
    the curve's grid parameter (exact, never differenced from ``z``) and
    ``end_value`` the field at the end of the parameter range.  ``rate``,
    when present, evaluates ``dz/du`` at arbitrary ``u`` of the curve's
    definition.
    """

    z: np.ndarray
    dz: np.ndarray
    end_value: np.ndarray
    kind: str = "custom"
    components: Optional[FieldComponents] = field(default=None, repr=False)
    rate: Optional[Callable] = field(default=None, repr=False)

    @property
    def closure(self):
        return self.end_value - self.z[0]

    @property
    def closure_defect(self):
        return float(_norm(self.closure))

    def is_open_family(self, c):
        return self.closure_defect > OPEN_FAMILY_TOL * c.length


def _param_rate(c):
    """``du/dp`` at the samples: 1 on u-grids, ``1/|r_u|`` on arc-length grids."""
    if not c.arclength:
        return np.ones(c.n)
    return c.speed / c.definition.speed(c.u)


def _integrate(c, integrand, z0, kind):
    definition = c.definition
    if definition is None:
        raise ValueError("building a field needs a curve that carries its definition")
    z0 = np.asarray(z0, dtype=float)
    if c.arclength:
        breaks = np.append(c.u, definition.period)
        table = cumulative_simpson(integrand, breaks, panels=2, constant=z0)
    else:
        table = exprlang.antiderivative_table(integrand, definition.period, c.n, constant=z0)
    dz = integrand(c.u) * _param_rate(c)[:, None]
    return BendingField(table[:-1].copy(), dz, table[-1].copy(), kind, rate=integrand)


def _wrap_domain(func):
    def wrapped(u):
        try:
            return func(u)
        except exprlang.DomainError as exc:
            raise GeometryError("domain", str(exc)) from exc

    return wrapped


def _coef(e, u):
    return np.zeros_like(u) if e is None else exprlang.evaluate(e, u)


def field_from_pq(c, recipe):
    """``z = z0 + int (p n1 + q n2) du`` along ``c``."""
    if recipe.variant != "pq":
        raise ValueError("recipe is not of the p, q kind")
    definition = c.definition

    @_wrap_domain
    def integrand(u):
        frame = definition.frame(u)
        return _coef(recipe.p, u)[:, None] * frame.n1 + _coef(recipe.q, u)[:, None] * frame.n2

    return _integrate(c, integrand, recipe.z0, "pq")


def field_from_general(c, recipe):
    """``z = z0 + int (P1 r' + P2 r'' + Q r' x r'') du`` along ``c``.

    Only the ``Q`` term is automatically normal to the curve; check the
    result with :func:`bending_residual`.
    """
    definition = c.definition

    @_wrap_domain
    def integrand(u):
        _, d1, d2 = definition.derivatives(u, 2)
        return (
            _coef(recipe.P1, u)[:, None] * d1
            + _coef(recipe.P2, u)[:, None] * d2
            + _coef(recipe.Q, u)[:, None] * np.cross(d1, d2)
        )

    return _integrate(c, integrand, recipe.z0, "general")


def build_field(c, recipe):
    if recipe.variant == "pq":
        return field_from_pq(c, recipe)
    return field_from_general(c, recipe)


def translation_field(c, vector):
    v = np.asarray(vector, dtype=float)
    z = np.tile(v, (c.n, 1))
    return BendingField(z, np.zeros_like(z), v.copy(), "translation", rate=lambda u: np.zeros(np.shape(u) + (3,)))


def rotation_field(c, axis, center=(0.0, 0.0, 0.0)):
    """Infinitesimal rotation ``z = axis x (r - center)``."""
    a = np.asarray(axis, dtype=float)
    o = np.asarray(center, dtype=float)
    rate = None
    if c.definition is not None and not c.arclength:
        rate = lambda u: np.cross(a, c.definition.derivatives(u, 1)[1])
    return BendingField(
        np.cross(a, c.r - o), np.cross(a, c.d1), np.cross(a, c.end_position - o), "rotation", rate=rate
    )


def scaling_field(c):
    """``z = r``; not a bending field, useful as a negative control."""
    return BendingField(c.r.copy(), c.d1.copy(), c.end_position.copy(), "scaling")


def combine_fields(fields, weights, kind="combination"):
    """Linear combination of fields sampled on the same curve."""
    w = [float(x) for x in weights]
    if len(w) != len(fields):
        raise ValueError("need one weight per field")
    z = sum(a * f.z for a, f in zip(w, fields))
    dz = sum(a * f.dz for a, f in zip(w, fields))
    end = sum(a * f.end_value for a, f in zip(w, fields))
    rate = None
    if all(f.rate is not None for f in fields):
        rates = [f.rate for f in fields]
        rate = lambda u: sum(a * r(u) for a, r in zip(w, rates))
    return BendingField(z, dz, end, kind, rate=rate)


def closed_combination(fields):
    """Unit-norm weights for which the combined field closes up.

    Closure imposes three linear conditions, so at least four fields are
    needed; the weights span the smallest singular direction of the
    closure matrix.
    """
    if len(fields) < 4:
        raise ValueError("need at least four fields to cancel a closure vector")
    gaps = np.stack([f.closure for f in fields], axis=1)
    weights = np.linalg.svd(gaps)[2][-1]
    return combine_fields(fields, weights, "closed"), weights


def bending_residual(c, f):
    """Largest normalized ``|r' . z'|`` over the samples."""
    num = np.abs(_dot(c.d1, f.dz))
    den = _norm(c.d1) * _norm(f.dz) + 1e-300
    return float(np.max(num / den))


class IsometryDefect(NamedTuple):
    delta_length: float
    max_gap: float
    increments: np.ndarray


def line_element_increments(c, f, eps):
    """Per-sample ``ds_eps - ds``, computed without cancellation."""
    a, b = c.d1, f.dz
    na = _norm(a)
    nb = _norm(a + eps * b)
    return (2.0 * eps * _dot(a, b) + eps**2 * _dot(b, b)) / (na + nb) * c.h


def isometry_defect(c, f, eps):
    """Length change and deviation of ``ds_eps - ds`` from its ``eps**2`` term."""
    inc = line_element_increments(c, f, eps)
    na = _norm(c.d1)
    second_order = eps**2 * _dot(f.dz, f.dz) / (2.0 * na**2) * na * c.h
    return IsometryDefect(float(np.sum(inc)), float(np.max(np.abs(inc - second_order))), inc)


def field_derivatives(c, f):
    """Second and third grid-parameter derivatives of the field."""
    fine = c.refined
    if f.rate is not None and fine is not None:
        rate = f.rate(fine.u)
        return tuple(
            periodic_derivative(rate, c.param_period, m)[:: c.oversample] for m in (1, 2)
        )
    return tuple(periodic_derivative(f.dz, c.param_period, m) for m in (1, 2))


def refine_field(c, f):
    """``(curve, field)`` on the curve's refined grid, or ``(c, f)`` unchanged.

    The field is re-integrated from its rate on the finer grid, starting at
    the same value ``z[0]``.
    """
    fine = c.refined
    if fine is None or f.rate is None:
        return c, f
    table = exprlang.antiderivative_table(f.rate, fine.param_period, fine.n, constant=f.z[0])
    return fine, BendingField(table[:-1].copy(), f.rate(fine.u), table[-1].copy(), f.kind, rate=f.rate)


def bend(c, f, eps):
    """The bent curve ``r + eps z`` with its full geometry.

    Higher derivatives of the field come from Fourier differentiation of
    ``dz``, which is periodic even when ``z`` is not.  Fields that know their
    rate are differentiated on the curve's refined grid.
    """
    if eps == 0:
        dz2 = dz3 = np.zeros_like(f.dz)
    else:
        dz2, dz3 = field_derivatives(c, f)
    d1 = c.d1 + eps * f.dz
    speed = _norm(d1)
    sigma = np.append(periodic_cumulative(speed, c.param_period), np.sum(speed) * c.h)
    return SampledCurve(
        c.u.copy(),
        c.param_period,
        c.r + eps * f.z,
        d1,
        c.d2 + eps * dz2,
        c.d3 + eps * dz3,
        sigma,
        c.end_position + eps * f.end_value,
        False,
        None,
    )


def _frame_matrix(c):
    return np.stack([c.t, c.n1, c.n2], axis=1)


def _rotate(k, tau, x):
    """Frenet matrix applied to component vectors: ``(k x1, -k x0 + tau x2, -tau x1)``."""
    return np.stack([k * x[:, 1], -k * x[:, 0] + tau * x[:, 2], -tau * x[:, 1]], axis=1)


def component_jets(c, z, zs, rate=None):
    """Components of ``z`` in the Frenet frame and three arc-length derivatives.

    ``zs`` is ``dz/ds`` (periodic).  The derivatives follow from the Frenet
    equations, ``Z' = A + M Z`` with ``A`` the components of ``zs``, so
    only periodic data is ever differentiated numerically.  With ``rate``
    (``dz/du`` as a function) ``A`` is differentiated on the curve's refined
    grid.
    """
    e = _frame_matrix(c)
    k, k1, k2, _ = c.kjet
    tau, t1, t2, _ = c.taujet
    z0 = np.einsum("nij,nj->ni", e, z)
    if rate is not None and c.refined is not None:
        a0, a1, a2 = c.fine_jet(
            lambda fc: np.einsum("nij,nj->ni", _frame_matrix(fc), rate(fc.u) / fc.speed[:, None]), 2
        )
    else:
        a0 = np.einsum("nij,nj->ni", e, zs)
        a1 = c.ds(a0)
        a2 = c.ds(a1)
    z1 = a0 + _rotate(k, tau, z0)
    z2 = a1 + _rotate(k1, t1, z0) + _rotate(k, tau, z1)
    z3 = a2 + _rotate(k2, t2, z0) + 2.0 * _rotate(k1, t1, z1) + _rotate(k, tau, z2)
    return z0, z1, z2, z3


def theorem_check(c, f):
    """Independent numerical check of ``z' = k z1`` on the sampled ``z``.

    Differentiates the periodic part of the tangential component directly
    from the ``z`` samples and adds the exact derivative of the drift.
    Returns ``(max residual, tolerance)`` with tolerance ``50 N^-2 max|z|``.
    """
    drift = f.closure
    p = c.grid
    zper = f.z - (p / c.param_period)[:, None] * drift
    tang = _dot(zper, c.t)
    dt_dp = (c.speed * c.k)[:, None] * c.n1
    deriv = periodic_derivative(tang, c.param_period, 1)
    deriv = deriv + _dot(drift, c.t) / c.param_period + (p / c.param_period) * _dot(dt_dp, drift)
    zt_prime = deriv / c.speed
    z1 = _dot(f.z, c.n1)
    residual = float(np.max(np.abs(zt_prime - c.k * z1)))
    tol = 50.0 * c.n**-2 * float(np.max(_norm(f.z)))
    return residual, tol


def decompose_field(c, f):
    """Return ``f`` with its Frenet components and their derivatives filled in."""
    zs = f.dz / c.speed[:, None]
    jets = component_jets(c, f.z, zs, f.rate)
    drift_vec = np.tile(f.closure, (c.n, 1))
    drift = component_jets(c, drift_vec, np.zeros_like(zs))
    # the frame is periodic, so the end of the range reuses sample 0's frame
    end_z = _frame_matrix(c)[0] @ f.end_value
    shift = end_z - jets[0][0]
    end_z1 = jets[1][0] + _rotate(c.k[:1], c.tau[:1], shift[None])[0]
    residual, tol = theorem_check(c, f)
    comps = FieldComponents(jets, drift, (end_z, end_z1), residual, tol)
    return replace(f, components=comps)


class BendReport(NamedTuple):
    closure_defect: float
    bending_residual: float
    open_family: bool
    isometry: dict


def bend_report(c, f, eps_list=(1e-2, 5e-3, 2.5e-3)):
    iso = {float(e): isometry_defect(c, f, e) for e in eps_list}
    return BendReport(f.closure_defect, bending_residual(c, f), f.is_open_family(c), iso)


def require_bending(c, f, tol=BENDING_TOL):
    """Decompose ``f`` if needed and refuse fields that are not bending fields."""
    res = bending_residual(c, f)
    if res > tol:
        raise NotBendingFieldError(f"bending residual {res:.3e} exceeds {tol:.0e}")
    if f.components is None:
        f = decompose_field(c, f)
    if not f.components.valid:
        raise NotBendingFieldError(
            f"z' - k z1 residual {f.components.theorem_residual:.3e} exceeds {f.components.theorem_tol:.3e}"
        )
    return f
