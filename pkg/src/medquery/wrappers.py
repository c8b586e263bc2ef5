"""Uniform access to heterogeneous sources.

Every source, whatever its native shape, is fetched as a typed tabular
snapshot. Tabular sources are pipe-delimited text files with a header line;
XML sources bind a record element and per-field child elements (optionally
after piping the document through an external transform command); views are
single-table selections evaluated on top of another table of the same
source.

Cells are either ``None`` (missing) or a :class:`Value` carrying a
canonical lexical form, so repeated fetches of an unchanged source are
bit-identical and joins over fetched data behave by value.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import sql_frontend
from .descriptors import (
    DataSourceDescriptor,
    FileBinding,
    Project,
    SourceFieldDef,
    SourceTableDef,
    ViewBinding,
    XmlBinding,
)
from .dtypes import Dtype, canonicalize, compare
from .errors import IoError, TypeCoercionError, UnknownFieldError, UnknownTableError


@dataclass(frozen=True)
class Value:
    lexical: str
    dtype: Dtype


Cell = Optional[Value]
Row = tuple[Cell, ...]


@dataclass(frozen=True)
class Table:
    name: str
    fields: tuple[SourceFieldDef, ...]
    rows: tuple[Row, ...]

    def column(self, name: str) -> int:
        for i, f in enumerate(self.fields):
            if f.name == name:
                return i
        raise UnknownFieldError(f"table '{self.name}' has no field '{name}'")


class AccessLog:
    """Append-only record of which (source, table) pairs were fetched."""

    def __init__(self) -> None:
        self._entries: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def append(self, source: str, table: str) -> None:
        with self._lock:
            self._entries.append((source, table))

    @property
    def entries(self) -> tuple[tuple[str, str], ...]:
        return tuple(self._entries)


FetchFn = Callable[..., Table]


def _coerce(text: str, field: SourceFieldDef, row_number: int) -> Cell:
    if text == "":
        return None
    try:
        return Value(canonicalize(text, field.dtype), field.dtype)
    except ValueError:
        raise TypeCoercionError(row_number, field.name, text) from None


def _resolve_path(project: Project, *parts: str) -> Path:
    path = Path(project.base_dir)
    for part in parts:
        if part:
            candidate = Path(part)
            path = candidate if candidate.is_absolute() else path / candidate
    return path


def _read_tabular(path: Path, table: SourceTableDef) -> tuple[Row, ...]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read '{path}': {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise IoError(f"'{path}': empty file, expected a header line")
    header = lines[0].split("|")
    declared = [f.name for f in table.fields]
    if sorted(header) != sorted(declared):
        raise IoError(
            f"'{path}': header {header} does not match declared fields {declared}"
        )
    positions = [header.index(name) for name in declared]
    rows: list[Row] = []
    for number, line in enumerate(lines[1:], start=1):
        cells = line.split("|")
        if len(cells) != len(header):
            raise IoError(f"'{path}' row {number}: expected {len(header)} cells, found {len(cells)}")
        rows.append(tuple(
            _coerce(cells[pos], field, number)
            for pos, field in zip(positions, table.fields)
        ))
    return tuple(rows)


def _run_transform(command: str, document: bytes, context: str) -> bytes:
    try:
        result = subprocess.run(
            shlex.split(command), input=document, capture_output=True, check=True,
        )
    except (OSError, subprocess.CalledProcessError) as exc:
        raise IoError(f"{context}: transform '{command}' failed: {exc}") from None
    return result.stdout


def _read_xml(project: Project, source: DataSourceDescriptor, table: SourceTableDef) -> tuple[Row, ...]:
    binding = table.binding
    assert isinstance(binding, XmlBinding)
    path = _resolve_path(project, source.location)
    try:
        document = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read '{path}': {exc}") from None
    if binding.transform is not None:
        document = _run_transform(binding.transform, document, f"table '{table.name}'")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise IoError(f"'{path}': not well-formed XML: {exc}") from None

    rows: list[Row] = []
    for number, record in enumerate(root.iter(binding.record_element), start=1):
        cells: list[Cell] = []
        for field in table.fields:
            element_name = binding.field_elements.get(field.name)
            element = record.find(element_name) if element_name else None
            text = element.text or "" if element is not None else ""
            cells.append(_coerce(text.strip(), field, number))
        rows.append(tuple(cells))
    return tuple(rows)


def fetch_table(project: Project, source: str, table: str, log: AccessLog | None = None,
                _active: frozenset[tuple[str, str]] = frozenset()) -> Table:
    """Fetch one declared table as a typed snapshot.

    Appends (source, table) to the access log exactly once per call; view
    bindings additionally log the tables they read underneath.
    """
    src = project.source(source)
    if src is None:
        raise UnknownTableError(f"unknown data source '{source}'")
    tdef = src.table(table)
    if tdef is None:
        raise UnknownTableError(f"data source '{source}' has no table '{table}'")
    if (source, table) in _active:
        raise IoError(f"view reference cycle through '{source}.{table}'")
    if log is not None:
        log.append(source, table)

    binding = tdef.binding
    if isinstance(binding, FileBinding):
        path = _resolve_path(project, src.location, binding.path)
        return Table(table, tdef.fields, _read_tabular(path, tdef))
    if isinstance(binding, XmlBinding):
        return Table(table, tdef.fields, _read_xml(project, src, tdef))
    assert isinstance(binding, ViewBinding)
    result = evaluate_view(project, source, binding.query, log,
                           _active=_active | {(source, table)})
    _check_view_shape(tdef, result)
    return Table(table, tdef.fields, result.rows)


def _check_view_shape(tdef: SourceTableDef, result: Table) -> None:
    projected = [(f.name, f.dtype) for f in result.fields]
    declared = [(f.name, f.dtype) for f in tdef.fields]
    if projected != declared:
        raise IoError(
            f"view '{tdef.name}' projects {projected} but declares {declared}"
        )


def evaluate_view(project: Project, source: str, view_def: str, log: AccessLog | None = None,
                  _active: frozenset[tuple[str, str]] = frozenset()) -> Table:
    """Evaluate a single-table view: fetch, filter, then project.

    Comparisons follow the typed rules (numeric by value, string by
    codepoint, boolean by equality); a comparison touching a missing cell
    excludes the row, and incomparable pairs never match.
    """
    query = sql_frontend.parse_view_select(view_def)
    base = fetch_table(project, source, query.from_tables[0], log, _active=_active)

    def passes(row: Row) -> bool:
        for cond in query.filters:
            lhs = row[base.column(cond.lhs.field)]
            if isinstance(cond.rhs, sql_frontend.QualifiedField):
                rhs = row[base.column(cond.rhs.field)]
            else:
                rhs = Value(cond.rhs.lexical, cond.rhs.dtype)
            if lhs is None or rhs is None:
                return False
            if compare(cond.op, lhs.lexical, lhs.dtype, rhs.lexical, rhs.dtype) is not True:
                return False
        return True

    columns = [base.column(f.field) for f in query.select]
    fields = tuple(base.fields[i] for i in columns)
    rows = tuple(
        tuple(row[i] for i in columns)
        for row in base.rows if passes(row)
    )
    return Table(base.name, fields, rows)
