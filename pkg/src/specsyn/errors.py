"""Exception types shared across the package."""


class SpecsynError(Exception):
    """Base class for all package-specific failures."""


class ParseError(SpecsynError):
    """Source text falls outside the supported C subset.

    Carries the 1-based line and column of the offending token so CLI
    output can point at the problem.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, col {column}: {message}"
        super().__init__(message)


class EmptyUnit(SpecsynError):
    """The translation unit contains no declarations."""


class DuplicateName(SpecsynError):
    """Two top-level declarations share a name."""


class DanglingDependency(SpecsynError):
    """A requested dependency closure references an unknown declaration."""


class AttachmentError(SpecsynError):
    """An annotation cannot be attached at the requested anchor."""


class UnresolvablePOI(SpecsynError):
    """A point-of-interest id does not resolve inside its segment."""


class UnsupportedConstruct(SpecsynError):
    """The bounded checker met a construct it cannot interpret."""


class TransportError(SpecsynError):
    """The live model backend failed after exhausting its retries."""


class ReplayMiss(SpecsynError):
    """A replay transcript holds no response for the issued prompt."""


class ExtractionEmpty(SpecsynError):
    """A model response yielded no parseable ACSL clause."""


class MalformedOutput(SpecsynError):
    """A model response could not be decoded at the transport level."""


class NoApplicableSites(SpecsynError):
    """No mutation operator applies anywhere in the given source."""


class EmptyVariantSet(SpecsynError):
    """Variant generation produced nothing to measure against."""


class ToolchainMissing(SpecsynError):
    """A required external binary (compiler, prover) is absent."""


class BackendUnavailable(SpecsynError):
    """The configured verifier or model backend cannot be constructed."""


class ConfigError(SpecsynError):
    """Configuration input is malformed or inconsistent."""
