import random
import xml.etree.ElementTree as ET

import pytest

from medquery.descriptors import (
    DataSourceDescriptor,
    DerivedOp,
    DerivedRelation,
    EqualityRelation,
    FieldRef,
    FileBinding,
    IntegratedFieldDef,
    IntegratedSchema,
    IntegratedTableDef,
    Project,
    SourceFieldDef,
    SourceKind,
    SourceTableDef,
)
from medquery.dtypes import Dtype
from medquery.schema_check import FindingCode, Severity, check_schema

from oracles import dfs_has_cycle


def ref(field: str) -> FieldRef:
    return FieldRef("s", "T", field)


def project_with(relations, field_names="ABCDEFGH", dtype=Dtype.INTEGER,
                 extra_tables=()) -> Project:
    fields = tuple(SourceFieldDef(name, dtype) for name in field_names)
    tables = [SourceTableDef("T", fields, FileBinding("t.txt"))]
    for name in extra_tables:
        tables.append(SourceTableDef(name, fields, FileBinding(f"{name}.txt")))
    source = DataSourceDescriptor("s", SourceKind.TABULAR, ".", None, tuple(tables))
    schema = IntegratedSchema(
        "g",
        (IntegratedTableDef("I", (IntegratedFieldDef("A", dtype, ref("A")),)),),
        tuple(relations),
    )
    return Project((source,), schema)


def codes(report):
    return [f.code for f in report.findings]


def test_clean_fig2_schema_has_no_errors(fig2_project):
    report = check_schema(fig2_project)
    assert report.accepted
    assert report.findings == ()


def test_type_mismatch_on_equality(fig2_project):
    # pair an integer field with a string field
    schema = fig2_project.schema
    bad = EqualityRelation(
        (FieldRef("uni", "STUDENT", "ID"),),
        (FieldRef("uni", "STUDENT", "FIRSTNAME"),),
    )
    project = Project(fig2_project.sources,
                      IntegratedSchema(schema.name, schema.tables, (bad,)))
    report = check_schema(project)
    errors = report.errors
    assert [f.code for f in errors] == [FindingCode.TYPE_MISMATCH]
    assert "integer" in errors[0].message and "string" in errors[0].message


def test_arity_mismatch():
    relation = EqualityRelation((ref("A"), ref("B")), (ref("C"),))
    report = check_schema(project_with([relation]))
    assert FindingCode.ARITY_MISMATCH in codes(report)
    # the comparable prefix is still type checked, so no other error appears
    assert [f.code for f in report.errors] == [FindingCode.ARITY_MISMATCH]


def test_unresolved_relation_ref():
    relation = EqualityRelation((ref("A"),), (ref("NOPE"),))
    report = check_schema(project_with([relation]))
    assert [f.code for f in report.errors] == [FindingCode.UNRESOLVED_REF]
    assert "NOPE" in report.errors[0].message


def test_cycle_is_reported_once_with_path():
    relations = [
        DerivedRelation(ref("A"), DerivedOp.ADD, (ref("B"), ref("C"))),
        DerivedRelation(ref("B"), DerivedOp.ADD, (ref("A"), ref("C"))),
    ]
    report = check_schema(project_with(relations))
    cyclic = [f for f in report.findings if f.code is FindingCode.CYCLIC_DERIVATION]
    assert len(cyclic) == 1
    assert "s.T.A -> s.T.B -> s.T.A" in cyclic[0].message


def test_derived_type_rules():
    relations = [
        DerivedRelation(ref("A"), DerivedOp.ADD, (ref("B"), ref("C"))),
    ]
    report = check_schema(project_with(relations, dtype=Dtype.STRING))
    mismatches = [f for f in report.errors if f.code is FindingCode.TYPE_MISMATCH]
    assert len(mismatches) == 3  # two operands and the target are all strings

    relations = [DerivedRelation(ref("A"), DerivedOp.CONCAT, (ref("B"), ref("C")))]
    report = check_schema(project_with(relations, dtype=Dtype.INTEGER))
    assert [f.code for f in report.errors] == [FindingCode.TYPE_MISMATCH]


def test_derived_needs_two_operands():
    relations = [DerivedRelation(ref("A"), DerivedOp.ADD, (ref("B"),))]
    report = check_schema(project_with(relations))
    assert FindingCode.ARITY_MISMATCH in [f.code for f in report.errors]


def test_unmapped_table_is_a_warning_only():
    report = check_schema(project_with([], extra_tables=("SPARE",)))
    warnings = [f for f in report.findings if f.severity is Severity.WARNING]
    assert [f.code for f in warnings] == [FindingCode.UNMAPPED_TABLE]
    assert "SPARE" in warnings[0].message
    assert report.accepted


def test_relation_reference_counts_as_mapped():
    relation = EqualityRelation(
        (ref("A"),), (FieldRef("s", "SPARE", "A"),),
    )
    report = check_schema(project_with([relation], extra_tables=("SPARE",)))
    assert FindingCode.UNMAPPED_TABLE not in codes(report)


def test_report_is_deterministic(fig2_project):
    bad = EqualityRelation(
        (FieldRef("uni", "STUDENT", "ID"), FieldRef("uni", "STUDENT", "DEBT")),
        (FieldRef("uni", "STUDENT", "FIRSTNAME"),),
    )
    schema = fig2_project.schema
    project = Project(fig2_project.sources,
                      IntegratedSchema(schema.name, schema.tables, schema.relations + (bad,)))
    first = check_schema(project).to_text()
    second = check_schema(project).to_text()
    assert first == second
    assert "error TYPE_MISMATCH schema/relation[2]:" in first


def test_text_and_xml_renderings():
    relation = EqualityRelation((ref("A"),), (ref("NOPE"),))
    report = check_schema(project_with([relation], extra_tables=("SPARE",)))
    text = report.to_text()
    assert text.splitlines()[0].startswith("error UNRESOLVED_REF schema/relation[1]:")
    assert text.rstrip().endswith("1 errors, 1 warnings")
    root = ET.fromstring(report.to_xml())
    assert root.tag == "report"
    assert [el.get("code") for el in root] == ["UNRESOLVED_REF", "UNMAPPED_TABLE"]


def _random_derived_relations(rng, n_fields=6, n_relations=8):
    names = [chr(ord("A") + i) for i in range(n_fields)]
    relations = []
    for _ in range(rng.randrange(1, n_relations + 1)):
        target = rng.choice(names)
        operands = rng.sample(names, rng.randrange(2, 4))
        relations.append(DerivedRelation(
            ref(target), DerivedOp.ADD, tuple(ref(n) for n in operands),
        ))
    return names, relations


@pytest.mark.parametrize("seed", range(12))
def test_cycle_detection_matches_dfs_oracle(seed):
    rng = random.Random(seed)
    names, relations = _random_derived_relations(rng)
    report = check_schema(project_with(relations, field_names=names))
    flagged = FindingCode.CYCLIC_DERIVATION in codes(report)

    edges = {ref(n): [] for n in names}
    for relation in relations:
        for operand in relation.operands:
            edges[relation.target].append(operand)
    assert flagged == dfs_has_cycle(edges)


@pytest.mark.parametrize("seed", range(8))
def test_adding_relation_is_monotone_for_local_findings(seed):
    # cycle findings merge when components join, so they are excluded here;
    # presence of a cycle is still monotone and checked below
    rng = random.Random(seed)
    names, relations = _random_derived_relations(rng)
    base = check_schema(project_with(relations, field_names=names))
    extended = check_schema(project_with(
        relations + [EqualityRelation((ref("A"),), (ref("NOPE"),))],
        field_names=names,
    ))

    def local_errors(report):
        return [f for f in report.errors if f.code is not FindingCode.CYCLIC_DERIVATION]

    assert set(local_errors(base)) <= set(local_errors(extended))

    had_cycle = FindingCode.CYCLIC_DERIVATION in codes(base)
    has_cycle = FindingCode.CYCLIC_DERIVATION in codes(extended)
    assert has_cycle or not had_cycle
