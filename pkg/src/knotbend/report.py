"""Plain-text run reports: ``[section]`` headers followed by ``key = value`` lines."""

import math
from numbers import Integral, Real

import numpy as np

FLOAT_FORMAT = "%.12g"


def format_value(value):
    """Render one report value; floats use a fixed 12-digit format."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (Integral, np.integer)):
        return str(int(value))
    if isinstance(value, (Real, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            raise ValueError(f"report values must be finite, got {x}")
        return FLOAT_FORMAT % (x + 0.0)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(format_value(v) for v in value)
    text = str(value)
    if "\n" in text:
        raise ValueError("report values must fit on one line")
    return text


class Report:
    """Ordered sections of key/value pairs."""

    def __init__(self):
        self.sections = {}

    def add(self, section, key, value):
        self.sections.setdefault(section, {})[key] = value
        return self

    def update(self, section, items):
        for key, value in items.items():
            self.add(section, key, value)
        return self

    def get(self, section, key):
        return self.sections[section][key]

    def render(self):
        blocks = []
        for name, items in self.sections.items():
            lines = [f"[{name}]"] + [f"{k} = {format_value(v)}" for k, v in items.items()]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def parse_report(text):
    """Inverse of :meth:`Report.render`, with every value kept as a string."""
    out, section = {}, None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            out[section] = {}
        else:
            key, _, value = line.partition(" = ")
            out[section][key] = value
    return out
