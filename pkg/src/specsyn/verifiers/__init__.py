"""Verifier backends: a bounded exhaustive checker and a subprocess adapter."""

from specsyn.verifiers.base import (
    DEPS_BEGIN_MARKER,
    DEPS_END_MARKER,
    REFUTED_STATUSES,
    VERDICT_STATUSES,
    VerifierVerdict,
    assemble_verification_unit,
    partition_verdicts,
    refuted_ids,
)
from specsyn.verifiers.external import DEFAULT_COMMAND, ExternalVerifier
from specsyn.verifiers.mock import MockDomain, MockVerifier, mock_check, outward_ints

__all__ = [
    "DEFAULT_COMMAND",
    "DEPS_BEGIN_MARKER",
    "DEPS_END_MARKER",
    "ExternalVerifier",
    "MockDomain",
    "MockVerifier",
    "REFUTED_STATUSES",
    "VERDICT_STATUSES",
    "VerifierVerdict",
    "assemble_verification_unit",
    "mock_check",
    "outward_ints",
    "partition_verdicts",
    "refuted_ids",
]
