"""Reading knot definition files.

A knot file is INI-style text with one ``[curve]`` section (``x``, ``y``,
``z`` and optionally ``period``) and at most one ``[field]`` section
(``p``/``q`` or ``P1``/``P2``/``Q``, plus an optional ``z0`` of three
comma-separated constants).  Values are expressions in ``u``; ``#`` starts
a comment.
"""

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from . import exprlang
from .bendfield import FieldRecipe
from .curvegeom import CurveDefinition

CURVE_KEYS = {"x", "y", "z", "period"}
FIELD_KEYS = {"p", "q", "P1", "P2", "Q", "z0"}


class KnotFileError(ValueError):
    """The file does not describe a knot.

    ``key`` names the offending entry (``section.key``) and ``offset`` is
    the character offset inside its value for expression syntax errors.
    """

    def __init__(self, message, key=None, offset=None):
        self.key = key
        self.offset = offset
        prefix = f"{key}: " if key else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class KnotSpec:
    curve: CurveDefinition
    field: Optional[FieldRecipe]
    source: str
    stem: str


def _expr(section, key, text):
    try:
        return exprlang.parse(text)
    except exprlang.ParseError as exc:
        raise KnotFileError(str(exc), f"{section}.{key}", exc.offset) from exc


def _constant(section, key, text):
    e = _expr(section, key, text)
    try:
        return exprlang.constant_value(e)
    except (ValueError, exprlang.DomainError) as exc:
        raise KnotFileError(str(exc), f"{section}.{key}") from exc


def _reader():
    cp = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None, strict=True
    )
    cp.optionxform = str
    return cp


def parse_knot_text(text, source="<string>"):
    """Parse knot-file text into a :class:`KnotSpec`."""
    cp = _reader()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise KnotFileError(f"malformed file: {exc.message if hasattr(exc, 'message') else exc}") from exc
    sections = set(cp.sections())
    unknown = sections - {"curve", "field"}
    if unknown:
        raise KnotFileError(f"unknown section(s) {sorted(unknown)}")
    if "curve" not in sections:
        raise KnotFileError("missing [curve] section")
    curve = cp["curve"]
    extra = set(curve) - CURVE_KEYS
    if extra:
        raise KnotFileError(f"unknown key(s) {sorted(extra)}", "curve")
    for key in ("x", "y", "z"):
        if key not in curve:
            raise KnotFileError("missing", f"curve.{key}")
    period = _constant("curve", "period", curve.get("period", "2*pi"))
    if not period > 0:
        raise KnotFileError(f"period must be positive, got {period}", "curve.period")
    definition = CurveDefinition(*(_expr("curve", k, curve[k]) for k in ("x", "y", "z")), period)

    recipe = None
    if "field" in sections:
        fsec = cp["field"]
        extra = set(fsec) - FIELD_KEYS
        if extra:
            raise KnotFileError(f"unknown key(s) {sorted(extra)}", "field")
        z0 = (0.0, 0.0, 0.0)
        if "z0" in fsec:
            parts = fsec["z0"].split(",")
            if len(parts) != 3:
                raise KnotFileError("needs three comma-separated values", "field.z0")
            z0 = tuple(_constant("field", "z0", p) for p in parts)
        coeffs = {k: _expr("field", k, v) for k, v in fsec.items() if k != "z0"}
        if not coeffs:
            raise KnotFileError("no coefficients given", "field")
        try:
            recipe = FieldRecipe(z0=z0, **coeffs)
        except ValueError as exc:
            raise KnotFileError(str(exc), "field") from exc
    return KnotSpec(definition, recipe, source, Path(source).stem)


def bundled_path(name):
    """Path of a knot file shipped with the package, or ``None``."""
    ref = resources.files("knotbend") / "examples" / Path(name).name
    return Path(str(ref)) if ref.is_file() else None


def load_knot(path):
    """Read a knot file.

    A path that does not exist but names one of the bundled examples (for
    instance ``examples/trefoil.knot``) resolves to the bundled copy.
    """
    p = Path(path)
    if not p.is_file():
        alt = bundled_path(p.name)
        if alt is None:
            raise KnotFileError(f"cannot read {path}: no such file")
        p = alt
    try:
        text = p.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise KnotFileError(f"cannot read {path}: {exc}") from exc
    spec = parse_knot_text(text, str(p))
    return spec
