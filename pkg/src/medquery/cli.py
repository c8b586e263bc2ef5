"""Command-line surface of the mediator.

    medquery validate    --sources s.xml --schema i.xml
    medquery show-schema --sources s.xml --schema i.xml [--format dot|xml]
    medquery convert     --sources s.xml --schema i.xml --query "SELECT ..."
    medquery query       --sources s.xml --schema i.xml --query "..."
                         [--lang sql|rdql] [--out table|xml|ntriples]
    medquery extract     --sources s.xml --schema i.xml --table T [--out ntriples]

Result payload goes to stdout only; diagnostics and the extraction/query
timing line go to stderr. Exit status is 0 on success, 1 on a domain error
(bad query, unsatisfiable schema, failed extraction) and 2 on usage or
descriptor/file problems. ``MEDQUERY_LOG`` (quiet, info, debug) controls
diagnostic verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from . import sql_to_rdql
from .descriptors import (
    DerivedRelation,
    EqualityRelation,
    IntegratedSchema,
    Project,
    parse_project,
    serialize_schema,
)
from .errors import (
    DuplicateNameError,
    MalformedXmlError,
    MedQueryError,
    UnknownTableError,
    UnresolvedFieldRefError,
)
from .extraction import build_triples, materialize_required, required_tables
from .iris import result_property_iri, result_subject_iri
from .rdql_engine import ResultSet, evaluate, parse_rdql
from .schema_check import check_schema
from .sql_frontend import parse_sql
from .triple_store import Iri, Triple, TripleStore, TypedLiteral, export_ntriples
from .wrappers import AccessLog, fetch_table

_DESCRIPTOR_ERRORS = (MalformedXmlError, DuplicateNameError, UnresolvedFieldRefError)

logger = logging.getLogger("medquery")


@dataclass
class ProjectConfig:
    source_desc_path: str
    schema_desc_path: str
    log_level: str = "info"


def _log_level() -> str:
    level = os.environ.get("MEDQUERY_LOG", "info").lower()
    return level if level in ("quiet", "info", "debug") else "info"


def _setup_logging(level: str) -> None:
    mapping = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=mapping[level], format="%(message)s")


def _load_project(config: ProjectConfig) -> Project:
    return parse_project(config.source_desc_path, config.schema_desc_path)


# --- commands ----------------------------------------------------------------


def cmd_validate(config: ProjectConfig, out=None) -> int:
    out = out or sys.stdout
    project = _load_project(config)
    report = check_schema(project)
    out.write(report.to_text())
    return 0 if report.accepted else 1


def cmd_show_schema(config: ProjectConfig, fmt: str, out=None) -> int:
    out = out or sys.stdout
    project = _load_project(config)
    if fmt == "xml":
        out.write(serialize_schema(project.schema))
    else:
        out.write(render_dot(project.schema))
    return 0


def cmd_convert(config: ProjectConfig, sql_text: str, out=None) -> int:
    out = out or sys.stdout
    project = _load_project(config)
    text, _ = sql_to_rdql.convert(parse_sql(sql_text, project.schema), project.schema)
    out.write(text)
    return 0


def cmd_query(config: ProjectConfig, query_text: str, lang: str, out_format: str,
              out=None) -> int:
    out = out or sys.stdout
    project = _load_project(config)
    report = check_schema(project)
    if not report.accepted:
        raise MedQueryError(
            "schema is not satisfiable:\n" + "".join(f"  {f}\n" for f in report.errors)
        )
    started = time.perf_counter()
    result, _, _ = execute_query(project, query_text, lang)
    elapsed_ms = round((time.perf_counter() - started) * 1000)
    if out_format == "table":
        out.write(render_result_table(result))
    elif out_format == "xml":
        out.write(render_result_xml(result))
    else:
        out.write(export_ntriples(result_triples(result)))
    if config.log_level != "quiet":
        print(f"# extraction+query time: {elapsed_ms} ms", file=sys.stderr)
    return 0


def cmd_extract(config: ProjectConfig, table: str, out=None) -> int:
    out = out or sys.stdout
    project = _load_project(config)
    report = check_schema(project)
    if not report.accepted:
        raise MedQueryError(
            "schema is not satisfiable:\n" + "".join(f"  {f}\n" for f in report.errors)
        )
    data = materialize_required(project, [table], log=AccessLog())
    out.write(export_ntriples(build_triples(data)))
    return 0


def execute_query(project: Project, query_text: str, lang: str,
                  fetch=fetch_table) -> tuple[ResultSet, TripleStore, AccessLog]:
    """Full pipeline: parse/convert, materialize what is needed, evaluate."""
    if lang == "sql":
        _, query = sql_to_rdql.convert(parse_sql(query_text, project.schema), project.schema)
    else:
        query = parse_rdql(query_text)
    needed = required_tables(query, project.schema)
    ordered = [t.name for t in project.schema.tables if t.name in needed]
    unknown = needed - set(ordered)
    if unknown:
        raise UnknownTableError(
            f"query references integrated table(s) {sorted(unknown)} not in the schema"
        )
    log = AccessLog()
    data = materialize_required(project, ordered, fetch=fetch, log=log)
    store = build_triples(data)
    logger.debug("materialized %d table(s), %d triple(s)", len(data.tables), len(store))
    return evaluate(query, store), store, log


# --- renderers ----------------------------------------------------------------


def _term_text(term) -> str:
    return term.lexical if isinstance(term, TypedLiteral) else term.value


def render_result_table(result: ResultSet) -> str:
    lines = ["|".join(result.columns)]
    lines.extend("|".join(_term_text(t) for t in row) for row in result.rows)
    return "".join(line + "\n" for line in lines)


def render_result_xml(result: ResultSet) -> str:
    root = ET.Element("results")
    for row in result.rows:
        row_el = ET.SubElement(root, "row")
        for name, term in zip(result.columns, row):
            col = ET.SubElement(row_el, "col", name=name)
            col.text = _term_text(term)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode") + "\n"


def result_triples(result: ResultSet) -> TripleStore:
    store = TripleStore()
    for index, row in enumerate(result.rows):
        subject = Iri(result_subject_iri(index))
        for name, term in zip(result.columns, row):
            store.insert(Triple(subject, Iri(result_property_iri(name)), term))
    return store


def render_dot(schema: IntegratedSchema) -> str:
    """Entity-relationship sketch: one node per table, one edge per relation."""
    lines = ["graph integrated_schema {", "  node [shape=record];"]
    for table in schema.tables:
        fields = "\\l".join(f"{f.name} : {f.dtype.value}" for f in table.fields)
        lines.append(f'  "{table.name}" [label="{{{table.name}|{fields}\\l}}"];')
    for relation in schema.relations:
        if isinstance(relation, EqualityRelation):
            label = "="
            left = _touching_tables(schema, relation.lhs)
            right = _touching_tables(schema, relation.rhs)
        else:
            assert isinstance(relation, DerivedRelation)
            label = relation.op.value
            left = _touching_tables(schema, [relation.target])
            right = _touching_tables(schema, relation.operands)
        drawn: set[frozenset[str]] = set()
        for a in left:
            for b in right:
                if a == b:
                    continue
                key = frozenset((a, b))
                if key not in drawn:
                    drawn.add(key)
                    lines.append(f'  "{a}" -- "{b}" [label="{label}"];')
    lines.append("}")
    return "".join(line + "\n" for line in lines)


def _touching_tables(schema: IntegratedSchema, refs) -> list[str]:
    """Integrated tables having a field mapped onto any of the given refs."""
    refs = set(refs)
    touched = []
    for table in schema.tables:
        if any(f.mapping in refs for f in table.fields):
            touched.append(table.name)
    return touched


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medquery",
        description="Query heterogeneous sources through an integrated schema.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--sources", required=True, help="data-source descriptor file")
        p.add_argument("--schema", required=True, help="integrated-schema descriptor file")

    common(sub.add_parser("validate", help="check descriptors and schema satisfiability"))

    show = sub.add_parser("show-schema", help="render the integrated schema")
    common(show)
    show.add_argument("--format", choices=("dot", "xml"), default="dot")

    convert = sub.add_parser("convert", help="translate a SQL query to RDQL")
    common(convert)
    _query_args(convert)

    query = sub.add_parser("query", help="answer a query over the integrated view")
    common(query)
    _query_args(query)
    query.add_argument("--lang", choices=("sql", "rdql"), default="sql")
    query.add_argument("--out", choices=("table", "xml", "ntriples"), default="table")

    extract = sub.add_parser("extract", help="materialize one integrated table as triples")
    common(extract)
    extract.add_argument("--table", required=True, help="integrated table name")
    extract.add_argument("--out", choices=("ntriples",), default="ntriples")
    return parser


def _query_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query", help="query text")
    group.add_argument("--query-file", help="file containing the query text")


def _query_text(args: argparse.Namespace) -> str:
    if args.query is not None:
        return args.query
    with open(args.query_file, encoding="utf-8") as handle:
        return handle.read()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = _log_level()
    _setup_logging(level)
    config = ProjectConfig(args.sources, args.schema, level)
    try:
        if args.command == "validate":
            return cmd_validate(config)
        if args.command == "show-schema":
            return cmd_show_schema(config, args.format)
        if args.command == "convert":
            return cmd_convert(config, _query_text(args))
        if args.command == "query":
            return cmd_query(config, _query_text(args), args.lang, args.out)
        return cmd_extract(config, args.table)
    except _DESCRIPTOR_ERRORS as exc:
        print(f"medquery: descriptor error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"medquery: {exc}", file=sys.stderr)
        return 2
    except MedQueryError as exc:
        print(f"medquery: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
