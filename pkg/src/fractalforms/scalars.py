"""Scalar backends: exact rationals for structural identities, floats for sweeps.

Every network carries a ``kind`` flag; operations preserve it.  Infinite
effective resistances are represented by ``math.inf``, never by a large float.
"""

from __future__ import annotations

import math
from fractions import Fraction

INF = math.inf

#: relative threshold below which float conductances are snapped to zero
#: after a trace (exact mode never snaps)
SNAP_RELATIVE = 1e-13


class ConfigError(ValueError):
    """Raised when a structure or family config is invalid."""


def parse_rational(text) -> Fraction:
    """Parse a config scalar ("3/5", "2", 2, 0.5) into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        if not text.is_integer():
            raise ConfigError(f"float {text!r} is not an exact rational; write it as 'p/q'")
        return Fraction(int(text))
    if isinstance(text, str):
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse rational {text!r}") from exc
    raise ConfigError(f"cannot parse rational {text!r}")


def format_rational(q: Fraction) -> str:
    return str(q)


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def as_float(x) -> float:
    return float(x)


def close(a, b, rel=1e-9, abs_tol=1e-12) -> bool:
    """Relative comparison that also works for exact scalars."""
    if is_exact(a) and is_exact(b):
        return a == b
    a, b = float(a), float(b)
    return abs(a - b) <= max(abs_tol, rel * max(abs(a), abs(b)))
