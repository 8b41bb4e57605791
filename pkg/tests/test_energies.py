import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import (
    CIRCLE,
    FIGURE_EIGHT,
    FIGURE_EIGHT_WILLMORE,
    TILTED_ELLIPSE,
    TREFOIL_DELTA_W,
    TREFOIL_WILLMORE,
    definition,
    random_closed_field,
)
from knotbend import energies
from knotbend.bendfield import rotation_field, translation_field
from knotbend.curvegeom import CurveDefinition, GeometryError, sample_curve
from knotbend.variations import delta_curvature, fd_variation


def test_circle_willmore(circle):
    assert energies.willmore(circle).value == pytest.approx(np.pi, abs=1e-12)
    assert energies.willmore(circle).refinement_delta < 1e-12


def test_reference_willmore_values(trefoil, figure_eight):
    assert energies.willmore(trefoil).value == pytest.approx(TREFOIL_WILLMORE, abs=1e-8)
    assert energies.willmore(figure_eight).value == pytest.approx(FIGURE_EIGHT_WILLMORE, abs=1e-10)


def test_willmore_refuses_open_curves():
    helix = sample_curve(CurveDefinition.from_strings("cos(u)", "sin(u)", "u"), 64)
    with pytest.raises(GeometryError):
        energies.willmore(helix)
    assert energies.willmore(helix, allow_open=True).value == pytest.approx(0.5 * 0.25 * helix.length)


@given(st.floats(0.3, 4.0))
def test_willmore_scales_inversely(scale):
    d = CurveDefinition.from_strings(*(f"{scale}*({e})" for e in TILTED_ELLIPSE))
    base = energies.willmore(sample_curve(definition(TILTED_ELLIPSE), 128)).value
    assert energies.willmore(sample_curve(d, 128)).value == pytest.approx(base / scale, rel=1e-10)


def test_mobius_circle_converges_to_four():
    values = {n: energies.mobius(sample_curve(definition(CIRCLE), n)).value for n in (256, 512, 1024)}
    assert abs(values[512] - 4.0) < 1e-3
    # second-order rule: Richardson extrapolation removes the h^2 term
    rich = (4 * values[1024] - values[512]) / 3
    assert abs(rich - 4.0) < 1e-8
    ratio = (values[256] - 4) / (values[512] - 4)
    assert ratio == pytest.approx(4.0, rel=0.01)


def test_mobius_scale_and_motion_invariance(figure_eight):
    base = energies.mobius(figure_eight).value
    moved = CurveDefinition.from_strings(
        "3*((2 + cos(2*u))*sin(3*u)) + 1", "-3*((2 + cos(2*u))*cos(3*u))", "3*sin(4*u) - 2"
    )
    assert energies.mobius(sample_curve(moved, 512)).value == pytest.approx(base, rel=1e-6)


def test_mobius_workers_are_deterministic(figure_eight):
    a = energies.mobius(figure_eight).value
    b = energies.mobius(figure_eight, workers=4).value
    assert a == b


def test_near_self_intersection_reports_pair():
    c = sample_curve(CurveDefinition.from_strings("sin(2*u)", "sin(u)", "sin(3*u) + 0.3*cos(2*u)"), 64)
    with pytest.raises(energies.SelfIntersectionError) as info:
        energies.mobius(c)
    assert info.value.pair == (0, 32)
    assert info.value.kind == "near-self-intersection"


def test_mobius_refuses_open_field(trefoil, trefoil_field):
    with pytest.raises(GeometryError) as info:
        energies.mobius_variation(trefoil, trefoil_field)
    assert info.value.kind == "not-closed"


@pytest.mark.parametrize("make", [lambda c: translation_field(c, (1, 2, 3)), lambda c: rotation_field(c, (0.2, 1, -0.4), (1, 0, 0))])
def test_rigid_fields_leave_energies_unchanged(figure_eight, make):
    f = make(figure_eight)
    assert abs(energies.mobius_variation(figure_eight, f).value) <= 1e-10
    assert abs(energies.willmore_variation_direct(figure_eight, f).value) <= 1e-10


def test_mobius_variation_is_derivative_of_discrete_energy(figure_eight):
    f = random_closed_field(figure_eight, seed=0)
    rep = fd_variation("E", figure_eight, f)
    assert np.all(rep.slopes > 1.9)


def test_mobius_variation_forward_oracle(figure_eight, figure_eight_field):
    rep = fd_variation("E", figure_eight, figure_eight_field, scheme="forward")
    assert np.all(rep.slopes >= 0.95)


@pytest.mark.parametrize("xyz,seed", [(FIGURE_EIGHT, 0), (TILTED_ELLIPSE, 1), (CIRCLE, 2), (FIGURE_EIGHT, 7)])
def test_willmore_theorem_form_equals_direct_form(xyz, seed):
    c = sample_curve(definition(xyz), 512)
    f = random_closed_field(c, seed=seed)
    direct = energies.willmore_variation_direct(c, f).value
    thm = energies.willmore_variation_theorem(c, f)
    scale = c.integrate_ds(np.abs(c.k * delta_curvature(c, f)))
    assert abs(thm.interior - direct) <= 1e-6 * scale
    assert abs(thm.boundary) <= 1e-8 * scale


def test_willmore_theorem_with_open_field(trefoil, trefoil_field):
    direct = energies.willmore_variation_direct(trefoil, trefoil_field).value
    thm = energies.willmore_variation_theorem(trefoil, trefoil_field)
    assert direct == pytest.approx(TREFOIL_DELTA_W, abs=1e-9)
    # for an open family the boundary term carries the mismatch
    assert abs(thm.boundary) > 0.5
    assert thm.interior + thm.boundary == pytest.approx(direct, rel=1e-8)


def test_willmore_variation_forward_oracle(trefoil, trefoil_field):
    rep = fd_variation("W", trefoil, trefoil_field, scheme="forward")
    assert np.all(rep.slopes >= 0.95)


def test_integrand_rows(figure_eight, figure_eight_field):
    rows = energies.mobius_variation_integrand(figure_eight, figure_eight_field, rows=[0, 5])
    assert rows.shape == (2, figure_eight.n)
    assert rows[0, 0] == 0.0 and rows[1, 5] == 0.0
