import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from knotbend.bendfield import FieldRecipe, field_from_pq
from knotbend.curvegeom import CurveDefinition, sample_curve

settings.register_profile(
    "knotbend", max_examples=40, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("knotbend")

TREFOIL = ("sin(u) + 2*cos(2*u)", "cos(u) - 2*cos(2*u)", "-sin(3*u)")
FIGURE_EIGHT = ("(2 + cos(2*u))*cos(3*u)", "(2 + cos(2*u))*sin(3*u)", "sin(4*u)")
CIRCLE = ("cos(u)", "sin(u)", "0")
HELIX = ("cos(u)", "sin(u)", "u")
TILTED_ELLIPSE = ("2*cos(u)", "sin(u)", "0.3*sin(2*u)")

# reference values computed once at high resolution and frozen
TREFOIL_LENGTH = 27.4745693849710
TREFOIL_CLOSURE_DEFECT = 1.26126
FIGURE_EIGHT_LENGTH = 42.966418055568
FIGURE_EIGHT_WILLMORE = 5.987712300186493
TREFOIL_WILLMORE = 30.968516744
TREFOIL_DELTA_W = -0.3835190676483


def definition(xyz):
    return CurveDefinition.from_strings(*xyz)


@pytest.fixture(scope="session")
def trefoil():
    return sample_curve(definition(TREFOIL), 512)


@pytest.fixture(scope="session")
def figure_eight():
    return sample_curve(definition(FIGURE_EIGHT), 512)


@pytest.fixture(scope="session")
def circle():
    return sample_curve(definition(CIRCLE), 512)


@pytest.fixture(scope="session")
def trefoil_field(trefoil):
    return field_from_pq(trefoil, FieldRecipe.from_strings(p="cos(3*u)", q="sin(3*u)"))


@pytest.fixture(scope="session")
def figure_eight_field(figure_eight):
    return field_from_pq(figure_eight, FieldRecipe.from_strings(p="cos(6*u)", q="sin(6*u)"))


def random_trig(rng, modes=4):
    """Random trigonometric polynomial in ``u`` as source text."""
    terms = [f"{rng.normal():.4f}*cos({m}*u) + {rng.normal():.4f}*sin({m}*u)" for m in range(modes + 1)]
    return " + ".join(terms)


def random_closed_field(c, seed=0, count=4):
    from knotbend.bendfield import closed_combination

    rng = np.random.default_rng(seed)
    fields = [
        field_from_pq(c, FieldRecipe.from_strings(p=random_trig(rng), q=random_trig(rng))) for _ in range(count)
    ]
    return closed_combination(fields)[0]


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
