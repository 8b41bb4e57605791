"""First variations of curve magnitudes under infinitesimal bending.

All primes are arc-length derivatives.  The formulas take the Frenet
components of the field from :func:`knotbend.bendfield.decompose_field`;
:func:`fd_variation` recomputes the bent curves from scratch and serves as
the independent oracle for every formula here.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bendfield import bend, require_bending
from .curvegeom import BIREGULAR_FLOOR, GeometryError
from .quadrature import log_slopes

QUANTITIES = ("k", "tau", "t", "n1", "n2", "ds", "W", "E")


class _Parts(NamedTuple):
    k: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    tau: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    z: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    dz: np.ndarray
    dz1: np.ndarray
    dz2: np.ndarray
    ddz1: np.ndarray
    ddz2: np.ndarray
    dddz2: np.ndarray


def _parts(c, f, jets=None):
    if np.min(c.k) < BIREGULAR_FLOOR:
        raise GeometryError("curvature-vanishes", "curvature below floor", int(np.argmin(c.k)))
    j0, j1, j2, j3 = f.components.jets if jets is None else jets
    k, k1, k2, _ = c.kjet
    tau, tau1, tau2, _ = c.taujet
    return _Parts(
        k, k1, k2, tau, tau1, tau2,
        j0[:, 0], j0[:, 1], j0[:, 2],
        j1[:, 0], j1[:, 1], j1[:, 2],
        j2[:, 1], j2[:, 2], j3[:, 2],
    )


def _prepare(c, f):
    f = require_bending(c, f)
    return f, _parts(c, f)


def _torsion_bracket(p):
    """``k tau z + z2'' - tau^2 z2 + 2 tau z1' + tau' z1``."""
    return p.k * p.tau * p.z + p.ddz2 - p.tau**2 * p.z2 + 2.0 * p.tau * p.dz1 + p.tau1 * p.z1


def _delta_tangent(c, p):
    a = p.dz1 - p.tau * p.z2 + p.k * p.z
    b = p.dz2 + p.tau * p.z1
    return a[:, None] * c.n1 + b[:, None] * c.n2


def _delta_curvature(p):
    return p.k1 * p.z + p.ddz1 + (p.k**2 - p.tau**2) * p.z1 - 2.0 * p.tau * p.dz2 - p.tau1 * p.z2


def _delta_torsion(p):
    bracket = 2.0 * p.tau * p.dz1 + p.tau1 * p.z1 + p.ddz2 - p.tau**2 * p.z2
    # derivative of the bracket, expanded with the product rule
    dbracket = (
        3.0 * p.tau1 * p.dz1
        + 2.0 * p.tau * p.ddz1
        + p.tau2 * p.z1
        + p.dddz2
        - 2.0 * p.tau * p.tau1 * p.z2
        - p.tau**2 * p.dz2
    )
    quotient_prime = dbracket / p.k - bracket * p.k1 / p.k**2
    return p.z * p.tau1 + p.k * (p.dz2 + 2.0 * p.tau * p.z1) + quotient_prime


def _delta_normals(c, p):
    bracket = _torsion_bracket(p) / p.k
    dn1 = -(p.k * p.z + p.dz1 - p.tau * p.z2)[:, None] * c.t + bracket[:, None] * c.n2
    dn2 = -(p.dz2 + p.tau * p.z1)[:, None] * c.t - bracket[:, None] * c.n1
    return dn1, dn2


def delta_tangent(c, f):
    """``dt = (z1' - tau z2 + k z) n1 + (z2' + tau z1) n2`` per sample."""
    _, p = _prepare(c, f)
    return _delta_tangent(c, p)


def delta_curvature(c, f):
    _, p = _prepare(c, f)
    return _delta_curvature(p)


def delta_torsion(c, f):
    _, p = _prepare(c, f)
    return _delta_torsion(p)


def delta_normals(c, f):
    """``(dn1, dn2)`` per sample."""
    _, p = _prepare(c, f)
    return _delta_normals(c, p)


@dataclass(frozen=True, eq=False)
class FrameVariation:
    dt: np.ndarray
    dn1: np.ndarray
    dn2: np.ndarray
    dk: np.ndarray
    dtau: np.ndarray


def frame_variation(c, f):
    """All five first variations at once."""
    _, p = _prepare(c, f)
    dn1, dn2 = _delta_normals(c, p)
    return FrameVariation(_delta_tangent(c, p), dn1, dn2, _delta_curvature(p), _delta_torsion(p))


class Deformed(NamedTuple):
    k: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    n1: np.ndarray
    n2: np.ndarray


def deformed_magnitudes(c, f, eps):
    """Magnitudes of the bent curve to first order in ``eps``."""
    v = frame_variation(c, f)
    return Deformed(
        c.k + eps * v.dk,
        c.tau + eps * v.dtau,
        c.t + eps * v.dt,
        c.n1 + eps * v.dn1,
        c.n2 + eps * v.dn2,
    )


# --------------------------------------------------------------------------
# finite-difference oracle


def _measure(quantity, curve):
    from . import energies

    if quantity == "k":
        return curve.k
    if quantity == "tau":
        return curve.tau
    if quantity in ("t", "n1", "n2"):
        return getattr(curve, quantity)
    if quantity == "ds":
        return curve.speed
    if quantity == "W":
        return energies.willmore(curve, allow_open=True).value
    if quantity == "E":
        return energies.mobius(curve).value
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


def analytic_variation(quantity, c, f):
    from . import energies

    if quantity == "k":
        return delta_curvature(c, f)
    if quantity == "tau":
        return delta_torsion(c, f)
    if quantity == "t":
        return delta_tangent(c, f)
    if quantity in ("n1", "n2"):
        return delta_normals(c, f)[0 if quantity == "n1" else 1]
    if quantity == "ds":
        return np.zeros(c.n)
    if quantity == "W":
        return energies.willmore_variation_direct(c, f).value
    if quantity == "E":
        return energies.mobius_variation(c, f).value
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


@dataclass(frozen=True, eq=False)
class VariationReport:
    """Analytic variation against finite-difference estimates.

    ``errors[i]`` is the max-norm distance between the analytic value and
    the estimate at ``eps[i]``; ``slopes`` are successive log-log slopes of
    ``errors`` against ``eps``.
    """

    quantity: str
    scheme: str
    analytic: object
    eps: tuple
    estimates: list = field(repr=False)
    errors: np.ndarray = None
    slopes: np.ndarray = None

    @property
    def max_discrepancy(self):
        return float(np.min(self.errors))


def fd_estimate(quantity, c, f, eps, scheme="central"):
    """``dA/deps`` at zero from fully recomputed bent curves."""
    if scheme == "central":
        plus = _measure(quantity, bend(c, f, eps))
        minus = _measure(quantity, bend(c, f, -eps))
        return (np.asarray(plus) - np.asarray(minus)) / (2.0 * eps)
    if scheme == "forward":
        plus = _measure(quantity, bend(c, f, eps))
        base = _measure(quantity, bend(c, f, 0.0))
        return (np.asarray(plus) - np.asarray(base)) / eps
    raise ValueError(f"unknown scheme {scheme!r}")


def fd_variation(quantity, c, f, eps_list=(1e-2, 1e-3, 1e-4), scheme="central"):
    """Compare the analytic first variation of ``quantity`` with finite differences."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    if quantity != "ds":
        f = require_bending(c, f)
    analytic = analytic_variation(quantity, c, f)
    estimates = [fd_estimate(quantity, c, f, e, scheme) for e in eps_list]
    errors = np.array([float(np.max(np.abs(np.asarray(analytic) - est))) for est in estimates])
    return VariationReport(
        quantity, scheme, analytic, tuple(float(e) for e in eps_list), estimates, errors,
        log_slopes(eps_list, errors),
    )
