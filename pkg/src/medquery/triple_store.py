"""In-memory RDF triple store with typed literals.

Terms are IRIs or typed literals (no blank nodes, no untyped literals).
The store keeps set semantics over triples and maintains SPO, POS and OSP
indexes so any wildcard pattern can be answered from the most selective
side. Exports are canonically ordered (SPO lexicographic over the
N-Triples serialization), which makes them diffable even though RDF itself
is unordered.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .dtypes import Dtype, is_canonical
from .errors import NtParseError
from .iris import dtype_from_iri, dtype_iri

_SCHEME_RE = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not _SCHEME_RE.match(self.value):
            raise ValueError(f"IRI must be absolute: {self.value!r}")

    def __str__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True)
class TypedLiteral:
    lexical: str
    dtype: Dtype

    def __post_init__(self) -> None:
        if not is_canonical(self.lexical, self.dtype):
            raise ValueError(f"{self.lexical!r} is not canonical {self.dtype.value}")

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Iri, TypedLiteral]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def format_term(term: Term) -> str:
    """Render a term in N-Triples syntax; doubles as the canonical sort key."""
    if isinstance(term, Iri):
        return f"<{term.value}>"
    return f'"{_escape(term.lexical)}"^^<{dtype_iri(term.dtype)}>'


def _triple_key(t: Triple) -> tuple[str, str, str]:
    return (t.subject.value, t.predicate.value, format_term(t.object))


class TripleStore:
    """Mutable while building, then typically treated as read-only."""

    def __init__(self) -> None:
        self._triples: set[Triple] = set()
        self._spo: dict[Iri, dict[Iri, set[Term]]] = {}
        self._pos: dict[Iri, dict[Term, set[Iri]]] = {}
        self._osp: dict[Term, dict[Iri, set[Iri]]] = {}

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=_triple_key))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripleStore):
            return NotImplemented
        return self._triples == other._triples

    def insert(self, t: Triple) -> bool:
        """Add a triple; returns True only when it was not already present."""
        if t in self._triples:
            return False
        self._triples.add(t)
        self._spo.setdefault(t.subject, {}).setdefault(t.predicate, set()).add(t.object)
        self._pos.setdefault(t.predicate, {}).setdefault(t.object, set()).add(t.subject)
        self._osp.setdefault(t.object, {}).setdefault(t.subject, set()).add(t.predicate)
        return True

    def match(self, s: Iri | None, p: Iri | None, o: Term | None) -> list[Triple]:
        """All triples unifying with the pattern (None is a wildcard), SPO-ordered."""
        result = [
            Triple(subj, pred, obj)
            for subj, pred, obj in self._match_raw(s, p, o)
        ]
        result.sort(key=_triple_key)
        return result

    def count(self, s: Iri | None, p: Iri | None, o: Term | None) -> int:
        return sum(1 for _ in self._match_raw(s, p, o))

    def _match_raw(self, s, p, o):
        if s is not None and p is not None and o is not None:
            if Triple(s, p, o) in self._triples:
                yield (s, p, o)
            return
        if s is not None:
            by_pred = self._spo.get(s, {})
            preds = [p] if p is not None else list(by_pred)
            for pred in preds:
                for obj in by_pred.get(pred, ()):
                    if o is None or obj == o:
                        yield (s, pred, obj)
            return
        if p is not None:
            by_obj = self._pos.get(p, {})
            objs = [o] if o is not None else list(by_obj)
            for obj in objs:
                for subj in by_obj.get(obj, ()):
                    yield (subj, p, obj)
            return
        if o is not None:
            by_subj = self._osp.get(o, {})
            for subj, preds in by_subj.items():
                for pred in preds:
                    yield (subj, pred, o)
            return
        for t in self._triples:
            yield (t.subject, t.predicate, t.object)


def export_ntriples(store: TripleStore) -> str:
    """Serialize the store, one triple per line, in canonical order."""
    lines = [
        f"{format_term(t.subject)} {format_term(t.predicate)} {format_term(t.object)} ."
        for t in store
    ]
    return "".join(line + "\n" for line in lines)


def import_ntriples(text: str) -> TripleStore:
    """Parse N-Triples text produced by :func:`export_ntriples`."""
    store = TripleStore()
    for number, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        store.insert(_parse_line(line, number))
    return store


class _LineScanner:
    def __init__(self, line: str, number: int):
        self.line = line
        self.number = number
        self.pos = 0

    def fail(self, message: str):
        raise NtParseError(self.number, message)

    def skip_ws(self) -> None:
        while self.pos < len(self.line) and self.line[self.pos] in " \t":
            self.pos += 1

    def iri(self) -> Iri:
        if self.pos >= len(self.line) or self.line[self.pos] != "<":
            self.fail("expected '<'")
        end = self.line.find(">", self.pos + 1)
        if end < 0:
            self.fail("unterminated IRI")
        value = self.line[self.pos + 1:end]
        self.pos = end + 1
        try:
            return Iri(value)
        except ValueError as exc:
            self.fail(str(exc))

    def literal(self) -> TypedLiteral:
        out: list[str] = []
        self.pos += 1  # opening quote
        while True:
            if self.pos >= len(self.line):
                self.fail("unterminated literal")
            ch = self.line[self.pos]
            if ch == '"':
                self.pos += 1
                break
            if ch == "\\":
                if self.pos + 1 >= len(self.line):
                    self.fail("dangling escape")
                code = self.line[self.pos + 1]
                if code not in _UNESCAPES:
                    self.fail(f"unknown escape '\\{code}'")
                out.append(_UNESCAPES[code])
                self.pos += 2
                continue
            out.append(ch)
            self.pos += 1
        if not self.line.startswith("^^", self.pos):
            self.fail("literal missing '^^<datatype>'")
        self.pos += 2
        dtype_ref = self.iri()
        try:
            dtype = dtype_from_iri(dtype_ref.value)
            return TypedLiteral("".join(out), dtype)
        except ValueError as exc:
            self.fail(str(exc))


def _parse_line(line: str, number: int) -> Triple:
    scanner = _LineScanner(line, number)
    scanner.skip_ws()
    subject = scanner.iri()
    scanner.skip_ws()
    predicate = scanner.iri()
    scanner.skip_ws()
    if scanner.pos < len(line) and line[scanner.pos] == '"':
        obj: Term = scanner.literal()
    else:
        obj = scanner.iri()
    scanner.skip_ws()
    if line[scanner.pos:].rstrip() != ".":
        scanner.fail("expected terminal ' .'")
    return Triple(subject, predicate, obj)
