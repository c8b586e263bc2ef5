"""Structural satisfiability checking of an integrated schema.

A schema is accepted when none of these checks produce an error finding:

  UNRESOLVED_REF      a relation references a source field that is not declared
  TYPE_MISMATCH       equality pairs fields of different dtypes, or a derived
                      relation mixes incompatible dtypes (add needs numeric
                      operands and a numeric target, concat a string target)
  ARITY_MISMATCH      equality sides differ in length, or a derived relation
                      has fewer than two operands
  CYCLIC_DERIVATION   the target -> operand graph over derived relations
                      contains a cycle

Unreferenced source tables additionally produce UNMAPPED_TABLE warnings:
sources are allowed to be broader than the schema.

All problems are reported as findings, never raised, and the report is a
pure, deterministic function of the project: findings appear in descriptor
document order.
"""

from __future__ import annotations

import enum
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .descriptors import (
    DerivedOp,
    DerivedRelation,
    EqualityRelation,
    FieldRef,
    Project,
    resolve_field_ref,
)
from .dtypes import NUMERIC_DTYPES, Dtype
from .errors import UnresolvedFieldRefError


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


class FindingCode(str, enum.Enum):
    UNRESOLVED_REF = "UNRESOLVED_REF"
    TYPE_MISMATCH = "TYPE_MISMATCH"
    ARITY_MISMATCH = "ARITY_MISMATCH"
    CYCLIC_DERIVATION = "CYCLIC_DERIVATION"
    UNMAPPED_TABLE = "UNMAPPED_TABLE"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: FindingCode
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value} {self.code.value} {self.location}: {self.message}"


@dataclass(frozen=True)
class SatisfiabilityReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity is Severity.ERROR)

    @property
    def accepted(self) -> bool:
        return not self.errors

    def to_text(self) -> str:
        lines = [str(f) for f in self.findings]
        lines.append(f"{len(self.errors)} errors, {len(self.findings) - len(self.errors)} warnings")
        return "\n".join(lines) + "\n"

    def to_xml(self) -> str:
        root = ET.Element("report")
        for f in self.findings:
            ET.SubElement(
                root, "finding", severity=f.severity.value, code=f.code.value,
                location=f.location, message=f.message,
            )
        ET.indent(root, space="  ")
        return ET.tostring(root, encoding="unicode") + "\n"


def _try_resolve(project: Project, ref: FieldRef) -> Dtype | None:
    try:
        return resolve_field_ref(project, ref).dtype
    except UnresolvedFieldRefError:
        return None


def check_schema(project: Project) -> SatisfiabilityReport:
    """Run all structural checks and collect the findings."""
    findings: list[Finding] = []

    def err(code: FindingCode, location: str, message: str) -> None:
        findings.append(Finding(Severity.ERROR, code, location, message))

    referenced: set[tuple[str, str]] = set()

    def note_ref(ref: FieldRef, dtype: Dtype | None) -> None:
        if dtype is not None:
            referenced.add((ref.source, ref.table))

    for table in project.schema.tables:
        for fdef in table.fields:
            referenced.add((fdef.mapping.source, fdef.mapping.table))

    for index, relation in enumerate(project.schema.relations, start=1):
        loc = f"schema/relation[{index}]"
        if isinstance(relation, EqualityRelation):
            types: dict[FieldRef, Dtype | None] = {}
            for ref in relation.lhs + relation.rhs:
                dtype = _try_resolve(project, ref)
                types[ref] = dtype
                note_ref(ref, dtype)
                if dtype is None:
                    err(FindingCode.UNRESOLVED_REF, loc, f"equality references undeclared field {ref}")
            for left, right in zip(relation.lhs, relation.rhs):
                lt, rt = types[left], types[right]
                if lt is not None and rt is not None and lt is not rt:
                    err(
                        FindingCode.TYPE_MISMATCH, loc,
                        f"equality pairs {left} ({lt.value}) with {right} ({rt.value})",
                    )
            if len(relation.lhs) != len(relation.rhs):
                err(
                    FindingCode.ARITY_MISMATCH, loc,
                    f"equality sides differ in length ({len(relation.lhs)} vs {len(relation.rhs)})",
                )
        else:
            target_type = _try_resolve(project, relation.target)
            note_ref(relation.target, target_type)
            if target_type is None:
                err(FindingCode.UNRESOLVED_REF, loc,
                    f"derived target references undeclared field {relation.target}")
            operand_types: list[Dtype | None] = []
            for ref in relation.operands:
                dtype = _try_resolve(project, ref)
                operand_types.append(dtype)
                note_ref(ref, dtype)
                if dtype is None:
                    err(FindingCode.UNRESOLVED_REF, loc,
                        f"derived operand references undeclared field {ref}")
            if relation.op is DerivedOp.ADD:
                for ref, dtype in zip(relation.operands, operand_types):
                    if dtype is not None and dtype not in NUMERIC_DTYPES:
                        err(FindingCode.TYPE_MISMATCH, loc,
                            f"add operand {ref} is {dtype.value}, expected numeric")
                if target_type is not None and target_type not in NUMERIC_DTYPES:
                    err(FindingCode.TYPE_MISMATCH, loc,
                        f"add target {relation.target} is {target_type.value}, expected numeric")
            else:
                if target_type is not None and target_type is not Dtype.STRING:
                    err(FindingCode.TYPE_MISMATCH, loc,
                        f"concat target {relation.target} is {target_type.value}, expected string")
            if len(relation.operands) < 2:
                err(FindingCode.ARITY_MISMATCH, loc,
                    f"derived relation has {len(relation.operands)} operand(s), needs at least 2")

    findings.extend(_cycle_findings(project))

    for src in project.sources:
        for table in src.tables:
            if (src.name, table.name) not in referenced:
                findings.append(Finding(
                    Severity.WARNING, FindingCode.UNMAPPED_TABLE,
                    f"datasources/datasource[{src.name}]/table[{table.name}]",
                    f"source table '{src.name}.{table.name}' is referenced by no mapping or relation",
                ))

    return SatisfiabilityReport(tuple(findings))


def _cycle_findings(project: Project) -> list[Finding]:
    """One CYCLIC_DERIVATION error per strongly connected derivation cycle."""
    order: list[FieldRef] = []
    edges: dict[FieldRef, list[FieldRef]] = {}
    first_relation: dict[FieldRef, int] = {}

    def node(ref: FieldRef, index: int) -> None:
        if ref not in edges:
            edges[ref] = []
            order.append(ref)
            first_relation[ref] = index

    for index, relation in enumerate(project.schema.relations, start=1):
        if not isinstance(relation, DerivedRelation):
            continue
        node(relation.target, index)
        for operand in relation.operands:
            node(operand, index)
            if operand not in edges[relation.target]:
                edges[relation.target].append(operand)

    sccs = _tarjan_sccs(order, edges)
    cyclic = [
        scc for scc in sccs
        if len(scc) > 1 or (len(scc) == 1 and scc[0] in edges[scc[0]])
    ]
    cyclic.sort(key=lambda scc: min(first_relation[ref] for ref in scc))

    findings = []
    for scc in cyclic:
        members = set(scc)
        start = min(scc, key=lambda ref: (first_relation[ref], str(ref)))
        path = [start]
        current = start
        while True:
            succ = next(
                (n for n in edges[current] if n in members and n not in path), None
            )
            if succ is None:
                break
            path.append(succ)
            current = succ
        rendered = " -> ".join(str(ref) for ref in path + [start])
        findings.append(Finding(
            Severity.ERROR, FindingCode.CYCLIC_DERIVATION,
            f"schema/relation[{first_relation[start]}]",
            f"derivation cycle: {rendered}",
        ))
    return findings


def _tarjan_sccs(order: list[FieldRef], edges: dict[FieldRef, list[FieldRef]]) -> list[list[FieldRef]]:
    index_of: dict[FieldRef, int] = {}
    lowlink: dict[FieldRef, int] = {}
    on_stack: set[FieldRef] = set()
    stack: list[FieldRef] = []
    sccs: list[list[FieldRef]] = []
    counter = 0

    for root in order:
        if root in index_of:
            continue
        work: list[tuple[FieldRef, int]] = [(root, 0)]
        while work:
            node, child_index = work.pop()
            if child_index == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            successors = edges[node]
            while child_index < len(successors):
                succ = successors[child_index]
                child_index += 1
                if succ not in index_of:
                    work.append((node, child_index))
                    work.append((succ, 0))
                    recurse = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[succ])
            if recurse:
                continue
            if lowlink[node] == index_of[node]:
                scc: list[FieldRef] = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == node:
                        break
                sccs.append(scc)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return sccs
