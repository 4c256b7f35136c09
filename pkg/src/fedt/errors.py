"""Exception hierarchy shared across the pipeline.

Every contract violation maps to a distinct subclass of FedtError so the CLI
can exit 1 with a precise message and callers can catch narrowly.
"""


class FedtError(Exception):
    """Base class for all pipeline errors."""


class InvalidSampleError(FedtError):
    """Sample contains NaN/Inf or has the wrong shape."""


class EmptyInputError(FedtError):
    """An operation that requires data received none."""


class TooShortError(FedtError):
    """Recording or series is shorter than the operation requires."""


class IngestError(FedtError):
    """Malformed input file; message carries file path and line number."""


class UnknownAdapterError(FedtError):
    """Adapter id is not registered."""


class CannotFitError(FedtError):
    """Threshold fitting requires at least one fall window."""


class ParameterError(FedtError):
    """A feature was invoked with out-of-range parameters."""


class ContractError(FedtError):
    """Arity mismatch, non-finite features, or similar API misuse."""


class FingerprintMismatchError(ContractError):
    """Feature vector fingerprint differs from the model's."""


class DegenerateLeafError(FedtError):
    """Leaf objective has no minimizer (non-positive curvature)."""


class DegenerateSplitError(FedtError):
    """Split gain is undefined (non-positive denominator)."""


class CannotTrainError(FedtError):
    """Training set lacks one of the two classes."""


class CannotEvaluateError(FedtError):
    """Evaluation preconditions not met (e.g. a class is absent)."""


class ModelFormatError(FedtError):
    """Model file is not in the expected format."""


class ModelVersionError(ModelFormatError):
    """Model file declares an unsupported format version."""


class ModelTruncatedError(ModelFormatError):
    """Model file ends before the declared content."""


class ModelChecksumError(ModelFormatError):
    """Whole-file checksum does not match the content."""
