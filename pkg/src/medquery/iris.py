"""IRI schemes used by the integrated RDF view.

Materialized rows live under ``http://integratedDB/<table>/row/<n>`` and each
field becomes the property ``http://integratedDB/<table>#<field>``. Literal
datatypes use the XML Schema namespace.
"""

from __future__ import annotations

from .dtypes import Dtype, is_identifier
from .errors import MalformedPropertyIriError

INTEGRATED_NS = "http://integratedDB/"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

_DTYPE_IRI = {d: XSD_NS + d.value for d in Dtype}
_IRI_DTYPE = {v: k for k, v in _DTYPE_IRI.items()}


def property_iri(table: str, field: str) -> str:
    return f"{INTEGRATED_NS}{table}#{field}"


def subject_iri(table: str, row_index: int) -> str:
    return f"{INTEGRATED_NS}{table}/row/{row_index}"


def result_subject_iri(row_index: int) -> str:
    return f"{INTEGRATED_NS}result/row/{row_index}"


def result_property_iri(column: str) -> str:
    return f"{INTEGRATED_NS}result#{column}"


def split_property_iri(iri: str) -> tuple[str, str]:
    """Split an integrated property IRI into (table, field).

    Raises MalformedPropertyIriError when the IRI does not follow the
    ``http://integratedDB/<table>#<field>`` scheme.
    """
    if iri.startswith(INTEGRATED_NS):
        rest = iri[len(INTEGRATED_NS):]
        table, sep, field = rest.partition("#")
        if sep and is_identifier(table) and is_identifier(field):
            return table, field
    raise MalformedPropertyIriError(f"not an integrated property IRI: {iri}")


def dtype_iri(dtype: Dtype) -> str:
    return _DTYPE_IRI[dtype]


def dtype_from_iri(iri: str) -> Dtype:
    try:
        return _IRI_DTYPE[iri]
    except KeyError:
        raise ValueError(f"unknown datatype IRI: {iri}") from None
