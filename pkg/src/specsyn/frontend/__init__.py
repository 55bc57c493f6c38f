"""Parsing front end for the supported C subset."""

from specsyn.frontend.annotations import (
    AnnotationBlock,
    InstrumentedSource,
    extract_annotations,
    instrument,
    reinsert,
    strip_annotations,
    strip_instrumentation,
)
from specsyn.frontend.parser import Declaration, SourceUnit, load_unit, parse_unit

__all__ = [
    "AnnotationBlock",
    "Declaration",
    "InstrumentedSource",
    "SourceUnit",
    "extract_annotations",
    "instrument",
    "load_unit",
    "parse_unit",
    "reinsert",
    "strip_annotations",
    "strip_instrumentation",
]
