import pytest
from hypothesis import given
from hypothesis import strategies as st

from medquery.dtypes import Dtype, canonicalize, compare, is_canonical


@pytest.mark.parametrize("text,expected", [
    ("7", "7"), ("+7", "7"), ("007", "7"), ("-0", "0"), (" 42 ", "42"), ("3.0", "3"),
])
def test_integer_canonicalization(text, expected):
    assert canonicalize(text, Dtype.INTEGER) == expected


@pytest.mark.parametrize("text,expected", [
    ("2.50", "2.5"), ("02.5", "2.5"), ("3", "3.0"), (".5", "0.5"),
    ("5.", "5.0"), ("-0.0", "0.0"), ("-2.5", "-2.5"), ("+1.25", "1.25"),
])
def test_decimal_canonicalization(text, expected):
    assert canonicalize(text, Dtype.DECIMAL) == expected


@pytest.mark.parametrize("text,dtype", [
    ("abc", Dtype.INTEGER), ("2.5", Dtype.INTEGER), ("", Dtype.INTEGER),
    ("1e3", Dtype.DECIMAL), ("x", Dtype.BOOLEAN), ("1", Dtype.BOOLEAN),
])
def test_rejects_bad_lexicals(text, dtype):
    with pytest.raises(ValueError):
        canonicalize(text, dtype)


def test_boolean_case_folding():
    assert canonicalize("True", Dtype.BOOLEAN) == "true"
    assert canonicalize(" FALSE ", Dtype.BOOLEAN) == "false"


@given(st.integers(-10**12, 10**12))
def test_integer_roundtrip(value):
    lex = canonicalize(str(value), Dtype.INTEGER)
    assert is_canonical(lex, Dtype.INTEGER)
    assert int(lex) == value


@given(st.decimals(allow_nan=False, allow_infinity=False, places=4))
def test_decimal_canonical_is_idempotent(value):
    lex = canonicalize(str(value), Dtype.DECIMAL)
    assert is_canonical(lex, Dtype.DECIMAL)
    assert canonicalize(lex, Dtype.DECIMAL) == lex


def test_numeric_compare_crosses_integer_and_decimal():
    assert compare("=", "2", Dtype.INTEGER, "2.0", Dtype.DECIMAL) is True
    assert compare("<", "2", Dtype.INTEGER, "2.5", Dtype.DECIMAL) is True
    assert compare(">", "-1", Dtype.INTEGER, "0.5", Dtype.DECIMAL) is False


def test_string_compare_is_codepoint_order():
    assert compare("<", "B", Dtype.STRING, "a", Dtype.STRING) is True


def test_cross_type_is_incomparable():
    assert compare("=", "2", Dtype.INTEGER, "2", Dtype.STRING) is None
    assert compare("<", "true", Dtype.BOOLEAN, "false", Dtype.BOOLEAN) is None
    assert compare("=", "true", Dtype.BOOLEAN, "true", Dtype.BOOLEAN) is True
