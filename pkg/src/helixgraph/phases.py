"""Edge phases: exact rational multiples of pi, or plain float radians.

A phase is either a :class:`fractions.Fraction` ``f`` meaning ``f * pi``
or a ``float`` in radians. Arithmetic stays exact while every operand is a
Fraction and degrades to float radians as soon as one is not.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Union

Phase = Union[Fraction, float]

_EXACT = re.compile(r"^([+-]?\d*)(?:/(\d+))?pi$")
_FLOAT = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_NONFINITE = re.compile(r"^[+-]?(?:nan|inf|infinity)$", re.IGNORECASE)


class PhaseFormatError(ValueError):
    """Raised for a token that is not a phase; ``nonfinite`` marks nan/inf."""

    def __init__(self, message: str, nonfinite: bool = False):
        super().__init__(message)
        self.nonfinite = nonfinite


def is_exact(p: Phase) -> bool:
    return isinstance(p, Fraction)


def to_radians(p: Phase) -> float:
    if isinstance(p, Fraction):
        return float(p) * math.pi
    return float(p)


def neg(p: Phase) -> Phase:
    return -p


def add(a: Phase, b: Phase) -> Phase:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return to_radians(a) + to_radians(b)


def total(phases: Iterable[Phase]) -> Phase:
    acc: Phase = Fraction(0)
    for p in phases:
        acc = add(acc, p)
    return acc


def reduce(p: Phase) -> Phase:
    """Reduce into (-pi, pi]; exact phases stay exact."""
    if isinstance(p, Fraction):
        r = p % 2  # in [0, 2)
        return r - 2 if r > 1 else r
    r = math.remainder(float(p), 2 * math.pi)  # in [-pi, pi]
    return math.pi if r == -math.pi else r


def parse(token: str) -> Phase:
    """Parse ``a/bpi``, ``api``, ``pi``, ``-pi`` or a decimal number of radians."""
    t = token.strip()
    m = _EXACT.match(t)
    if m:
        num, den = m.group(1), m.group(2)
        if num in ("", "+", "-"):
            num += "1"
        if den is not None and int(den) == 0:
            raise PhaseFormatError(f"zero denominator in phase {token!r}")
        return Fraction(int(num), int(den) if den else 1)
    if _NONFINITE.match(t):
        raise PhaseFormatError(f"non-finite phase {token!r}", nonfinite=True)
    if _FLOAT.match(t):
        value = float(t)
        if not math.isfinite(value):
            raise PhaseFormatError(f"non-finite phase {token!r}", nonfinite=True)
        return value
    raise PhaseFormatError(f"not a phase: {token!r}")


def format_phase(p: Phase) -> str:
    """Inverse of :func:`parse`; floats use ``repr`` so they round-trip bitwise."""
    if isinstance(p, Fraction):
        return f"{p.numerator}/{p.denominator}pi"
    return repr(float(p))
