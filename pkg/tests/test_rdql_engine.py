import itertools
import random

import pytest

from medquery.dtypes import Dtype
from medquery.errors import (
    RdqlParseError,
    UnboundFilterVarError,
    UnboundSelectVarError,
)
from medquery.rdql_engine import (
    FilterAtom,
    RdqlQuery,
    TriplePattern,
    Var,
    evaluate,
    parse_rdql,
)
from medquery.triple_store import Iri, Triple, TripleStore, TypedLiteral

from conftest import FIG2_RDQL
from generators import random_rdql_query, random_store
from oracles import enumerate_rdql


def lit(lexical, dtype=Dtype.INTEGER):
    return TypedLiteral(lexical, dtype)


def test_parse_two_table_query():
    query = parse_rdql(FIG2_RDQL)
    assert len(query.select) == 4
    assert len(query.patterns) == 6
    assert len(query.filters) == 1
    atom = query.filters[0]
    assert atom.lhs == Var("DEBT") and atom.op == ">" and atom.rhs == lit("2000")


def test_parse_minimal():
    query = parse_rdql('SELECT ?x WHERE (?x <http://p> "a")')
    assert query.patterns == (
        TriplePattern(Var("x"), Iri("http://p"), lit("a", Dtype.STRING)),
    )
    assert query.filters == ()


def test_unbound_select_var():
    with pytest.raises(UnboundSelectVarError):
        parse_rdql('SELECT ?y WHERE (?x <http://p> "a")')


def test_unbound_filter_var():
    with pytest.raises(UnboundFilterVarError):
        parse_rdql('SELECT ?x WHERE (?x <http://p> "a") AND ?z > 1')


@pytest.mark.parametrize("text", [
    "WHERE (?x <http://p> ?y)",
    "SELECT ?x WHERE",
    "SELECT ?x WHERE (?x <http://p>)",
    'SELECT ?x WHERE ("lit" <http://p> ?x)',
    "SELECT ?x WHERE (?x <http://p> ?y) AND ?x ~ 1",
    'SELECT ?x WHERE (?x <http://p> "a"^^<http://bad>)',
])
def test_parse_errors(text):
    with pytest.raises(RdqlParseError):
        parse_rdql(text)


def test_typed_literal_and_boolean_atoms():
    query = parse_rdql(
        'SELECT ?x WHERE (?x <http://p> ?y) '
        'AND ?y >= 2.5 && ?y != "a" && ?x = true'
    )
    assert query.filters[0].rhs == lit("2.5", Dtype.DECIMAL)
    assert query.filters[1].rhs == lit("a", Dtype.STRING)
    assert query.filters[2].rhs == lit("true", Dtype.BOOLEAN)


def _student_grade_store():
    store = TripleStore()
    students = [("1", "Ann", "K", "1500"), ("2", "Bob", "L", "2500")]
    for n, (sid, first, last, debt) in enumerate(students):
        subject = Iri(f"http://integratedDB/STUDENT/row/{n}")
        store.insert(Triple(subject, Iri("http://integratedDB/STUDENT#ID"), lit(sid)))
        store.insert(Triple(subject, Iri("http://integratedDB/STUDENT#FIRSTNAME"),
                            lit(first, Dtype.STRING)))
        store.insert(Triple(subject, Iri("http://integratedDB/STUDENT#LASTNAME"),
                            lit(last, Dtype.STRING)))
        store.insert(Triple(subject, Iri("http://integratedDB/STUDENT#DEBT"), lit(debt)))
    grades = [("1", "17"), ("2", "12")]
    for n, (sid, avg) in enumerate(grades):
        subject = Iri(f"http://integratedDB/GRADE/row/{n}")
        store.insert(Triple(subject, Iri("http://integratedDB/GRADE#STUDENTID"), lit(sid)))
        store.insert(Triple(subject, Iri("http://integratedDB/GRADE#AVERAGE"), lit(avg)))
    return store


def test_two_table_query_over_fixture():
    # nested-loop oracle by hand: only Bob (debt 2500 > 2000) joins grade 12
    result = evaluate(parse_rdql(FIG2_RDQL), _student_grade_store())
    assert result.columns == ["FIRSTNAME", "LASTNAME", "AVERAGE", "DEBT"]
    assert [[t.lexical for t in row] for row in result.rows] == [
        ["Bob", "L", "12", "2500"],
    ]


def test_empty_store_yields_no_rows():
    result = evaluate(parse_rdql(FIG2_RDQL), TripleStore())
    assert result.rows == []


def test_spo_pattern_yields_row_per_triple():
    store = _student_grade_store()
    result = evaluate(parse_rdql("SELECT ?s, ?p, ?o WHERE (?s ?p ?o)"), store)
    assert len(result.rows) == len(store)


def test_duplicates_are_kept():
    store = _student_grade_store()
    result = evaluate(parse_rdql(
        "SELECT ?s WHERE (?s <http://integratedDB/STUDENT#ID> ?v)"), store)
    assert len(result.rows) == 2
    result = evaluate(parse_rdql("SELECT ?p WHERE (?s ?p ?o)"), store)
    assert len(result.rows) == len(store)  # repeated predicate terms survive


def test_repeated_variable_within_pattern():
    store = TripleStore()
    store.insert(Triple(Iri("http://x/a"), Iri("http://x/p"), Iri("http://x/a")))
    store.insert(Triple(Iri("http://x/a"), Iri("http://x/p"), Iri("http://x/b")))
    result = evaluate(parse_rdql("SELECT ?s WHERE (?s <http://x/p> ?s)"), store)
    assert [[t.value for t in row] for row in result.rows] == [["http://x/a"]]


def test_cross_type_comparison_is_false_and_counted():
    store = TripleStore()
    store.insert(Triple(Iri("http://x/a"), Iri("http://x/p"), lit("a", Dtype.STRING)))
    store.insert(Triple(Iri("http://x/b"), Iri("http://x/p"), lit("3")))
    result = evaluate(parse_rdql(
        "SELECT ?v WHERE (?s <http://x/p> ?v) AND ?v > 1"), store)
    assert [[t.lexical for t in row] for row in result.rows] == [["3"]]
    assert result.cross_type_warnings == 1


def test_iri_bindings_never_satisfy_comparisons():
    store = TripleStore()
    store.insert(Triple(Iri("http://x/a"), Iri("http://x/p"), Iri("http://x/o")))
    result = evaluate(parse_rdql(
        'SELECT ?v WHERE (?s <http://x/p> ?v) AND ?v = "http://x/o"'), store)
    assert result.rows == []
    assert result.cross_type_warnings == 1


def test_join_order_independence():
    store = _student_grade_store()
    base = parse_rdql(FIG2_RDQL)
    expected = evaluate(base, store).rows
    for perm in itertools.permutations(range(len(base.patterns))):
        query = RdqlQuery(base.select, tuple(base.patterns[i] for i in perm), base.filters)
        assert evaluate(query, store).rows == expected


def test_adding_triples_is_monotone():
    rng = random.Random(11)
    store = random_store(rng, 60)
    query = random_rdql_query(rng, store)
    before = evaluate(query, store).rows
    store.insert(Triple(Iri("http://example/s0"), Iri("http://example/p0"), lit("5")))
    after = evaluate(query, store).rows
    for row in set(before):
        assert before.count(row) <= after.count(row)


@pytest.mark.parametrize("seed", range(25))
def test_matches_exhaustive_enumeration(seed):
    rng = random.Random(1000 + seed)
    store = random_store(rng, 120)
    query = random_rdql_query(rng, store)
    result = evaluate(query, store)
    assert result.rows == enumerate_rdql(query, store)
