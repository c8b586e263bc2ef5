"""Value vocabulary shared across the mediator.

All data flowing through the system is typed with one of four dtypes and
carried as a canonical lexical string:

  integer  optional sign followed by digits, no leading zeros ("-3", "0", "27")
  decimal  optional sign, digits '.' digits, no redundant zeros ("2.5", "0.0")
  boolean  "true" or "false"
  string   any text

Canonical forms make term equality coincide with value equality, which is
what makes join matching over typed literals behave like relational joins.
"""

from __future__ import annotations

import enum
import operator
import re
from fractions import Fraction

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class Dtype(str, enum.Enum):
    STRING = "string"
    INTEGER = "integer"
    DECIMAL = "decimal"
    BOOLEAN = "boolean"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


NUMERIC_DTYPES = frozenset({Dtype.INTEGER, Dtype.DECIMAL})

_INTEGER_INPUT = re.compile(r"[+-]?\d+")
_DECIMAL_INPUT = re.compile(r"[+-]?(\d+(\.\d+)?|\.\d+|\d+\.)")
_CANONICAL_INTEGER = re.compile(r"0|-?[1-9]\d*")
_CANONICAL_DECIMAL = re.compile(r"-?(0|[1-9]\d*)\.(0|\d*[1-9])")


def is_identifier(name: str) -> bool:
    return bool(IDENTIFIER_RE.fullmatch(name))


def canonicalize(text: str, dtype: Dtype) -> str:
    """Coerce raw text to the canonical lexical form of ``dtype``.

    Raises ValueError when the text is not a valid lexical form. Strings
    pass through untouched; numerics and booleans are normalized so equal
    values always share one lexical representation.
    """
    if dtype is Dtype.STRING:
        return text
    s = text.strip()
    if dtype is Dtype.BOOLEAN:
        low = s.lower()
        if low in ("true", "false"):
            return low
        raise ValueError(f"not a boolean: {text!r}")
    if dtype is Dtype.INTEGER:
        if _INTEGER_INPUT.fullmatch(s):
            return str(int(s))
        # accept decimal-shaped input when the value is integral
        if _DECIMAL_INPUT.fullmatch(s):
            value = Fraction(s)
            if value.denominator == 1:
                return str(int(value))
        raise ValueError(f"not an integer: {text!r}")
    if dtype is Dtype.DECIMAL:
        if not _DECIMAL_INPUT.fullmatch(s):
            raise ValueError(f"not a decimal: {text!r}")
        negative = s.startswith("-")
        digits = s.lstrip("+-")
        whole, _, frac = digits.partition(".")
        whole = whole.lstrip("0") or "0"
        frac = frac.rstrip("0") or "0"
        if whole == "0" and frac == "0":
            return "0.0"
        return ("-" if negative else "") + whole + "." + frac
    raise ValueError(f"unknown dtype: {dtype!r}")


def is_canonical(lexical: str, dtype: Dtype) -> bool:
    if dtype is Dtype.STRING:
        return True
    if dtype is Dtype.INTEGER:
        return bool(_CANONICAL_INTEGER.fullmatch(lexical))
    if dtype is Dtype.DECIMAL:
        return bool(_CANONICAL_DECIMAL.fullmatch(lexical))
    if dtype is Dtype.BOOLEAN:
        return lexical in ("true", "false")
    return False


def numeric_value(lexical: str, dtype: Dtype) -> Fraction:
    if dtype not in NUMERIC_DTYPES:
        raise ValueError(f"{dtype.value} is not numeric")
    return Fraction(lexical)


_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

COMPARISON_OPS = tuple(_OPS)


def compare(op: str, a_lexical: str, a_dtype: Dtype, b_lexical: str, b_dtype: Dtype) -> bool | None:
    """Typed comparison of two values; ``None`` when the pair is incomparable.

    Numerics compare by value regardless of integer/decimal mix, strings by
    codepoint order, booleans by equality only. Everything else (including
    cross-type pairs) is incomparable.
    """
    fn = _OPS[op]
    if a_dtype in NUMERIC_DTYPES and b_dtype in NUMERIC_DTYPES:
        return fn(Fraction(a_lexical), Fraction(b_lexical))
    if a_dtype is Dtype.STRING and b_dtype is Dtype.STRING:
        return fn(a_lexical, b_lexical)
    if a_dtype is Dtype.BOOLEAN and b_dtype is Dtype.BOOLEAN and op in ("=", "!="):
        return fn(a_lexical, b_lexical)
    return None
