"""Deterministic plain-text rendering of nested report documents.

Reports are dictionaries of strings, numbers, booleans, arrays, lists and
nested dictionaries. Rendering sorts keys, prints floats with %.17g and
booleans as true/false, so identical inputs produce byte-identical output.
"""

from __future__ import annotations

import numpy as np

__all__ = ["render", "format_number"]


def format_number(x):
    """%.17g for floats (round-trip exact), plain digits for integral values."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return "%d" % int(x)
    v = float(x)
    if v == 0.0:
        v = 0.0  # canonical zero (folds -0.0)
    return "%.17g" % v


def _format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer, float, np.floating)):
        return format_number(v)
    if isinstance(v, str):
        return v
    if isinstance(v, np.ndarray):
        if v.ndim == 0:
            return format_number(float(v))
        if v.ndim == 1:
            return "[" + ", ".join(format_number(float(t)) for t in v) + "]"
        if v.ndim == 2:
            return "[" + "; ".join(
                ", ".join(format_number(float(t)) for t in row) for row in v
            ) + "]"
        raise TypeError("arrays of dimension > 2 are not renderable")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format_value(t) for t in v) + "]"
    raise TypeError(f"cannot render value of type {type(v).__name__}")


def _render_into(doc, lines, indent):
    pad = "  " * indent
    for key in sorted(doc):
        value = doc[key]
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            _render_into(value, lines, indent + 1)
        else:
            lines.append(f"{pad}{key}: {_format_value(value)}")


def render(doc):
    """Render a nested dict to text; keys sorted, one `key: value` per line."""
    lines = []
    _render_into(doc, lines, 0)
    return "\n".join(lines) + "\n"
