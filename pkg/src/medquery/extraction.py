"""Materialize integrated tables lazily and turn them into RDF triples.

Only the integrated tables a query touches are built. For each one the
first integrated field names the master source table; every master row
becomes one integrated row. Fields mapped into the master table are copied
directly; fields mapped elsewhere are looked up by following declared
equality relations from the master table (transitively, shortest chain
first, descriptor order breaking ties). A field whose mapping is the
target of a derived relation is computed from the operand values instead.

Foreign lookups that match nothing leave the cell missing; lookups that
match several rows take the first in source order and log a warning.
Missing cells produce no triple, so such rows simply fail triple patterns
over that property.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Iterable, Union

from .descriptors import (
    DerivedRelation,
    EqualityRelation,
    FieldRef,
    IntegratedSchema,
    IntegratedTableDef,
    Project,
    SourceFieldDef,
)
from .dtypes import Dtype, canonicalize
from .errors import NoRelationPathError, TypeCoercionError, UnknownTableError
from .iris import property_iri, split_property_iri, subject_iri
from .rdql_engine import RdqlQuery, Var
from .triple_store import Iri, Triple, TripleStore, TypedLiteral
from .wrappers import AccessLog, Cell, Row, Table, Value, fetch_table

logger = logging.getLogger(__name__)

FetchFn = Callable[[Project, str, str, AccessLog | None], Table]


@dataclass
class IntegratedData:
    """Materialized integrated tables, keyed by integrated table name."""

    tables: dict[str, Table] = field(default_factory=dict)


def required_tables(query: RdqlQuery, schema: IntegratedSchema) -> set[str]:
    """Integrated tables a query can touch.

    A concrete predicate names its table through the property IRI scheme;
    a variable predicate may match anything, so it conservatively requires
    every table in the schema.
    """
    names: set[str] = set()
    for pattern in query.patterns:
        if isinstance(pattern.p, Var):
            names.update(t.name for t in schema.tables)
            continue
        if isinstance(pattern.p, Iri):
            table, _ = split_property_iri(pattern.p.value)
            names.add(table)
    return names


# --- join graph over source tables ------------------------------------------

_Node = tuple[str, str]


@dataclass(frozen=True)
class _Hop:
    """One traversal step: rows of ``table`` matching on the paired fields."""

    table: _Node
    near_fields: tuple[str, ...]  # fields on the side already materialized
    far_fields: tuple[str, ...]   # corresponding fields on ``table``


def _join_edges(project: Project) -> dict[_Node, list[_Hop]]:
    """Adjacency over source tables from usable equality relations.

    A relation is usable as a join edge when each side sits entirely in one
    source table and the sides differ; both directions are added, in
    descriptor order.
    """
    edges: dict[_Node, list[_Hop]] = {}
    for relation in project.schema.relations:
        if not isinstance(relation, EqualityRelation):
            continue
        if not relation.lhs or len(relation.lhs) != len(relation.rhs):
            continue
        lhs_tables = {(r.source, r.table) for r in relation.lhs}
        rhs_tables = {(r.source, r.table) for r in relation.rhs}
        if len(lhs_tables) != 1 or len(rhs_tables) != 1:
            continue
        left, right = next(iter(lhs_tables)), next(iter(rhs_tables))
        if left == right:
            continue
        lhs_fields = tuple(r.field for r in relation.lhs)
        rhs_fields = tuple(r.field for r in relation.rhs)
        edges.setdefault(left, []).append(_Hop(right, lhs_fields, rhs_fields))
        edges.setdefault(right, []).append(_Hop(left, rhs_fields, lhs_fields))
    return edges


def _chain_to(edges: dict[_Node, list[_Hop]], start: _Node, goal: _Node) -> list[_Hop] | None:
    """Shortest hop sequence from start to goal; BFS keeps descriptor-order ties."""
    if start == goal:
        return []
    parents: dict[_Node, tuple[_Node, _Hop]] = {}
    frontier = [start]
    visited = {start}
    while frontier:
        next_frontier: list[_Node] = []
        for node in frontier:
            for hop in edges.get(node, ()):
                if hop.table in visited:
                    continue
                visited.add(hop.table)
                parents[hop.table] = (node, hop)
                if hop.table == goal:
                    chain: list[_Hop] = []
                    at = goal
                    while at != start:
                        at, hop_back = parents[at]
                        chain.append(hop_back)
                    chain.reverse()
                    return chain
                next_frontier.append(hop.table)
        frontier = next_frontier
    return None


# --- per-field value plans ----------------------------------------------------


@dataclass(frozen=True)
class _DirectPlan:
    column: int


@dataclass(frozen=True)
class _ChainPlan:
    chain: tuple[_Hop, ...]
    final_field: str


@dataclass(frozen=True)
class _DerivedPlan:
    op: str
    operands: tuple["_Plan", ...]


_Plan = Union[_DirectPlan, _ChainPlan, _DerivedPlan]


class _Materializer:
    def __init__(self, project: Project, fetch: FetchFn, log: AccessLog | None):
        self.project = project
        self.fetch = fetch
        self.log = log
        self.edges = _join_edges(project)
        self._cache: dict[_Node, Table] = {}
        self.derived_by_target: dict[FieldRef, DerivedRelation] = {}
        for relation in project.schema.relations:
            if isinstance(relation, DerivedRelation):
                self.derived_by_target.setdefault(relation.target, relation)

    def table(self, node: _Node) -> Table:
        if node not in self._cache:
            self._cache[node] = self.fetch(self.project, node[0], node[1], self.log)
        return self._cache[node]

    def plan(self, ref: FieldRef, master: _Node, field_name: str,
             stack: tuple[FieldRef, ...] = ()) -> _Plan:
        node = (ref.source, ref.table)
        if node == master:
            return _DirectPlan(self.table(master).column(ref.field))
        derived = self.derived_by_target.get(ref)
        if derived is not None and ref not in stack:
            operands = tuple(
                self.plan(operand, master, field_name, stack + (ref,))
                for operand in derived.operands
            )
            return _DerivedPlan(derived.op.value, operands)
        chain = _chain_to(self.edges, master, node)
        if chain is None:
            raise NoRelationPathError(
                field_name,
                f"no equality relation connects {ref.source}.{ref.table} "
                f"to master table {master[0]}.{master[1]}",
            )
        return _ChainPlan(tuple(chain), ref.field)

    def value(self, plan: _Plan, master_row: Row, master: _Node,
              row_number: int, target: Dtype, field_name: str) -> Cell:
        raw = self._raw_value(plan, master_row, master)
        if raw is None:
            return None
        try:
            return Value(canonicalize(raw.lexical, target), target)
        except ValueError:
            raise TypeCoercionError(row_number, field_name, raw.lexical) from None

    def _raw_value(self, plan: _Plan, master_row: Row, master: _Node) -> Cell:
        if isinstance(plan, _DirectPlan):
            return master_row[plan.column]
        if isinstance(plan, _ChainPlan):
            return self._follow_chain(plan, master_row, master)
        values = [self._raw_value(p, master_row, master) for p in plan.operands]
        if any(v is None for v in values):
            return None
        if plan.op == "concat":
            return Value("".join(v.lexical for v in values), Dtype.STRING)
        total = sum(Decimal(v.lexical) for v in values)
        dtype = Dtype.INTEGER if total == total.to_integral_value() else Dtype.DECIMAL
        return Value(canonicalize(str(total), dtype), dtype)

    def _follow_chain(self, plan: _ChainPlan, master_row: Row, master: _Node) -> Cell:
        current_table = self.table(master)
        candidates: list[Row] = [master_row]
        for hop in plan.chain:
            near_columns = [current_table.column(f) for f in hop.near_fields]
            far_table = self.table(hop.table)
            far_columns = [far_table.column(f) for f in hop.far_fields]
            matched: list[Row] = []
            for row in candidates:
                keys = [row[c] for c in near_columns]
                if any(k is None for k in keys):
                    continue
                for far_row in far_table.rows:
                    if all(far_row[fc] == key for fc, key in zip(far_columns, keys)):
                        if far_row not in matched:
                            matched.append(far_row)
            candidates = matched
            current_table = far_table
            if not candidates:
                return None
        if len(candidates) > 1:
            logger.warning(
                "%d rows of %s.%s match; keeping the first in source order",
                len(candidates), current_table.name, plan.final_field,
            )
        return candidates[0][current_table.column(plan.final_field)]


def materialize_integrated_table(project: Project, table_name: str,
                                 fetch: FetchFn = fetch_table,
                                 log: AccessLog | None = None) -> Table:
    """Build one integrated table from its sources.

    ``fetch`` is the wrapper entry point and exists as a parameter so tests
    can interpose caching or scheduling; the result is a pure function of
    the fetched table contents.
    """
    tdef = project.schema.table(table_name)
    if tdef is None:
        raise UnknownTableError(f"integrated schema has no table '{table_name}'")
    materializer = _Materializer(project, fetch, log)
    return _materialize(materializer, tdef)


def _materialize(materializer: _Materializer, tdef: IntegratedTableDef) -> Table:
    master_ref = tdef.fields[0].mapping
    master: _Node = (master_ref.source, master_ref.table)
    master_table = materializer.table(master)

    plans = [
        (fdef, materializer.plan(fdef.mapping, master, fdef.name))
        for fdef in tdef.fields
    ]
    # the integrated table carries the integrated names and dtypes
    fields = tuple(SourceFieldDef(fdef.name, fdef.dtype) for fdef in tdef.fields)
    rows = tuple(
        tuple(
            materializer.value(plan, row, master, number, fdef.dtype, fdef.name)
            for fdef, plan in plans
        )
        for number, row in enumerate(master_table.rows, start=1)
    )
    return Table(tdef.name, fields, rows)


def materialize_required(project: Project, names: Iterable[str],
                         fetch: FetchFn = fetch_table,
                         log: AccessLog | None = None) -> IntegratedData:
    """Materialize the named integrated tables, in the order given."""
    data = IntegratedData()
    for name in names:
        data.tables[name] = materialize_integrated_table(project, name, fetch, log)
    return data


def build_triples(data: IntegratedData) -> TripleStore:
    """One subject per row, one triple per non-missing cell."""
    store = TripleStore()
    for name, table in data.tables.items():
        predicates = [Iri(property_iri(name, f.name)) for f in table.fields]
        for index, row in enumerate(table.rows):
            subject = Iri(subject_iri(name, index))
            for cell, predicate in zip(row, predicates):
                if cell is None:
                    continue
                store.insert(Triple(subject, predicate, TypedLiteral(cell.lexical, cell.dtype)))
    return store
