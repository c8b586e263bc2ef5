"""RDQL subset: conjunctive triple patterns plus a comparison conjunction.

Concrete syntax::

    SELECT ?FIRSTNAME, ?DEBT
    WHERE
    (?tbl_0 <http://integratedDB/STUDENT#FIRSTNAME> ?FIRSTNAME),
    (?tbl_0 <http://integratedDB/STUDENT#DEBT> ?DEBT)
    AND ?DEBT > 2000 && ?FIRSTNAME != "Ann"

Patterns are parenthesized subject/predicate/object terms; terms are
variables, angle-bracketed IRIs or quoted literals with an optional
``^^<datatype>`` (string by default). Constraint atoms compare a variable
against a variable or a literal; bare numerals and ``true``/``false`` are
typed literals.

Evaluation is a natural join over the patterns restricted by the
constraints and projected onto the selected variables. Duplicates are kept
and rows come back in a canonical order, so equal queries over equal
stores render identically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .dtypes import COMPARISON_OPS, Dtype, canonicalize, compare
from .errors import (
    RdqlParseError,
    UnboundFilterVarError,
    UnboundSelectVarError,
)
from .iris import dtype_from_iri
from .triple_store import Iri, Term, TripleStore, TypedLiteral, format_term

_VAR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INTEGER_RE = re.compile(r"[+-]?\d+")
_DECIMAL_RE = re.compile(r"[+-]?\d+\.\d+")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Var, Iri, TypedLiteral]


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm


@dataclass(frozen=True)
class FilterAtom:
    lhs: Var
    op: str
    rhs: Union[Var, TypedLiteral]


@dataclass(frozen=True)
class RdqlQuery:
    select: tuple[Var, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[FilterAtom, ...] = ()


@dataclass
class ResultSet:
    columns: list[str]
    rows: list[tuple[Term, ...]]
    cross_type_warnings: int = 0


# --- parsing -----------------------------------------------------------------


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, message: str):
        raise RdqlParseError(message, self.pos)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def eof(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def expect(self, literal: str) -> None:
        if not self.take(literal):
            self.fail(f"expected {literal!r}")

    def keyword(self, word: str) -> bool:
        self.skip_ws()
        end = self.pos + len(word)
        if self.text[self.pos:end].upper() != word:
            return False
        if end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
            return False
        self.pos = end
        return True

    def variable(self) -> Var:
        self.expect("?")
        match = _VAR_RE.match(self.text, self.pos)
        if not match:
            self.fail("expected variable name after '?'")
        self.pos = match.end()
        return Var(match.group())

    def iri(self) -> Iri:
        self.expect("<")
        end = self.text.find(">", self.pos)
        if end < 0:
            self.fail("unterminated IRI")
        value = self.text[self.pos:end]
        self.pos = end + 1
        try:
            return Iri(value)
        except ValueError as exc:
            self.fail(str(exc))

    def quoted_literal(self) -> TypedLiteral:
        self.expect('"')
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                self.fail("unterminated literal")
            ch = self.text[self.pos]
            if ch == '"':
                self.pos += 1
                break
            if ch == "\\":
                if self.pos + 1 >= len(self.text):
                    self.fail("dangling escape")
                code = self.text[self.pos + 1]
                mapped = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}.get(code)
                if mapped is None:
                    self.fail(f"unknown escape '\\{code}'")
                out.append(mapped)
                self.pos += 2
                continue
            out.append(ch)
            self.pos += 1
        dtype = Dtype.STRING
        if self.text.startswith("^^", self.pos):
            self.pos += 2
            dtype_ref = self.iri()
            try:
                dtype = dtype_from_iri(dtype_ref.value)
            except ValueError as exc:
                self.fail(str(exc))
        try:
            return TypedLiteral("".join(out), dtype)
        except ValueError as exc:
            self.fail(str(exc))

    def pattern_term(self) -> PatternTerm:
        ch = self.peek()
        if ch == "?":
            return self.variable()
        if ch == "<":
            return self.iri()
        if ch == '"':
            return self.quoted_literal()
        self.fail("expected variable, IRI or literal")

    def atom_rhs(self) -> Union[Var, TypedLiteral]:
        ch = self.peek()
        if ch == "?":
            return self.variable()
        if ch == '"':
            return self.quoted_literal()
        if self.keyword("TRUE"):
            return TypedLiteral("true", Dtype.BOOLEAN)
        if self.keyword("FALSE"):
            return TypedLiteral("false", Dtype.BOOLEAN)
        match = _DECIMAL_RE.match(self.text, self.pos)
        if match:
            self.pos = match.end()
            return TypedLiteral(canonicalize(match.group(), Dtype.DECIMAL), Dtype.DECIMAL)
        match = _INTEGER_RE.match(self.text, self.pos)
        if match:
            self.pos = match.end()
            return TypedLiteral(canonicalize(match.group(), Dtype.INTEGER), Dtype.INTEGER)
        self.fail("expected variable or literal")

    def operator(self) -> str:
        self.skip_ws()
        for op in ("<=", ">=", "!=", "=", "<", ">"):
            if self.text.startswith(op, self.pos):
                self.pos += len(op)
                return op
        self.fail("expected comparison operator")


def parse_rdql(text: str) -> RdqlQuery:
    scanner = _Scanner(text)
    if not scanner.keyword("SELECT"):
        scanner.fail("expected SELECT")
    select = [scanner.variable()]
    while scanner.take(","):
        select.append(scanner.variable())

    if not scanner.keyword("WHERE"):
        scanner.fail("expected WHERE")
    patterns = [_parse_pattern(scanner)]
    while scanner.take(","):
        patterns.append(_parse_pattern(scanner))

    filters: list[FilterAtom] = []
    if scanner.keyword("AND"):
        filters.append(_parse_atom(scanner))
        while scanner.take("&&"):
            filters.append(_parse_atom(scanner))

    if not scanner.eof():
        scanner.fail("unexpected trailing input")

    query = RdqlQuery(tuple(select), tuple(patterns), tuple(filters))
    bound = pattern_variables(query)
    for var in query.select:
        if var.name not in bound:
            raise UnboundSelectVarError(f"selected variable ?{var.name} occurs in no pattern")
    for atom in query.filters:
        for side in (atom.lhs, atom.rhs):
            if isinstance(side, Var) and side.name not in bound:
                raise UnboundFilterVarError(
                    f"constraint variable ?{side.name} occurs in no pattern"
                )
    return query


def _parse_pattern(scanner: _Scanner) -> TriplePattern:
    scanner.expect("(")
    s = scanner.pattern_term()
    p = scanner.pattern_term()
    o = scanner.pattern_term()
    scanner.expect(")")
    if isinstance(s, TypedLiteral):
        scanner.fail("literal subjects are not allowed")
    if isinstance(p, TypedLiteral):
        scanner.fail("literal predicates are not allowed")
    return TriplePattern(s, p, o)


def _parse_atom(scanner: _Scanner) -> FilterAtom:
    if scanner.peek() != "?":
        scanner.fail("constraint must start with a variable")
    lhs = scanner.variable()
    op = scanner.operator()
    if op not in COMPARISON_OPS:
        scanner.fail(f"unsupported operator {op!r}")
    return FilterAtom(lhs, op, scanner.atom_rhs())


def pattern_variables(query: RdqlQuery) -> set[str]:
    names: set[str] = set()
    for pattern in query.patterns:
        for term in (pattern.s, pattern.p, pattern.o):
            if isinstance(term, Var):
                names.add(term.name)
    return names


# --- evaluation --------------------------------------------------------------


def evaluate(query: RdqlQuery, store: TripleStore) -> ResultSet:
    """Conjunctive match, constraint filtering, projection.

    Pattern order is chosen by ascending candidate count for speed; the
    result does not depend on it. Rows are sorted lexicographically over
    their term serializations and duplicates are kept.
    """
    order = sorted(
        range(len(query.patterns)),
        key=lambda i: (_candidates(query.patterns[i], store), i),
    )

    bindings: list[dict[str, Term]] = [{}]
    for i in order:
        pattern = query.patterns[i]
        next_bindings: list[dict[str, Term]] = []
        for binding in bindings:
            s = _resolved(pattern.s, binding)
            p = _resolved(pattern.p, binding)
            o = _resolved(pattern.o, binding)
            for triple in store.match(
                s if isinstance(s, Iri) else None,
                p if isinstance(p, Iri) else None,
                o if not isinstance(o, Var) else None,
            ):
                extended = _unify(pattern, triple, binding)
                if extended is not None:
                    next_bindings.append(extended)
        bindings = next_bindings
        if not bindings:
            break

    warnings = 0
    selected: list[dict[str, Term]] = []
    for binding in bindings:
        ok = True
        for atom in query.filters:
            verdict = _atom_holds(atom, binding)
            if verdict is None:
                warnings += 1
                ok = False
            elif not verdict:
                ok = False
        if ok:
            selected.append(binding)

    columns = [var.name for var in query.select]
    rows = [tuple(binding[name] for name in columns) for binding in selected]
    rows.sort(key=lambda row: tuple(format_term(term) for term in row))
    return ResultSet(columns, rows, warnings)


def _candidates(pattern: TriplePattern, store: TripleStore) -> int:
    return store.count(
        pattern.s if isinstance(pattern.s, Iri) else None,
        pattern.p if isinstance(pattern.p, Iri) else None,
        pattern.o if not isinstance(pattern.o, Var) else None,
    )


def _resolved(term: PatternTerm, binding: dict[str, Term]) -> PatternTerm:
    if isinstance(term, Var):
        return binding.get(term.name, term)
    return term


def _unify(pattern: TriplePattern, triple, binding: dict[str, Term]) -> dict[str, Term] | None:
    extended = dict(binding)
    for term, value in (
        (pattern.s, triple.subject),
        (pattern.p, triple.predicate),
        (pattern.o, triple.object),
    ):
        if isinstance(term, Var):
            bound = extended.get(term.name)
            if bound is None:
                extended[term.name] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return extended


def _atom_holds(atom: FilterAtom, binding: dict[str, Term]) -> bool | None:
    """True/False per the typed comparison rules, None when incomparable."""
    try:
        lhs = binding[atom.lhs.name]
    except KeyError:
        raise UnboundFilterVarError(f"?{atom.lhs.name} is not bound") from None
    if isinstance(atom.rhs, Var):
        try:
            rhs: Term = binding[atom.rhs.name]
        except KeyError:
            raise UnboundFilterVarError(f"?{atom.rhs.name} is not bound") from None
    else:
        rhs = atom.rhs
    if not isinstance(lhs, TypedLiteral) or not isinstance(rhs, TypedLiteral):
        return None
    return compare(atom.op, lhs.lexical, lhs.dtype, rhs.lexical, rhs.dtype)
