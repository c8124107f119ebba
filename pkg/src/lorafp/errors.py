"""Exceptions raised by :mod:`lorafp`.

Every exception carries a short, dotted :attr:`LorafpError.code` that the CLI
prints on failure so scripts can branch on the kind of error without parsing
messages.

"""

from typing import ClassVar


class LorafpError(Exception):
    """Base class for all :mod:`lorafp` errors."""

    #: Machine-readable error code printed by the CLI.
    code: ClassVar[str] = "lorafp.error"


class PlanError(LorafpError, ValueError):
    """An experiment plan is malformed or internally inconsistent."""

    code = "experiment.plan"


class RecordingMissingError(LorafpError, FileNotFoundError):
    """One member of a ``.sigmf-data``/``.sigmf-meta`` pair doesn't exist."""

    code = "sigmf.missing_pair"


class RecordingTruncatedError(LorafpError, ValueError):
    """A data file's size isn't a whole number of samples."""

    code = "sigmf.truncated"


class RecordingCorruptError(LorafpError, ValueError):
    """A data file doesn't match the checksum recorded in its metadata."""

    code = "sigmf.checksum"


class UnknownDatatypeError(LorafpError, ValueError):
    """A metadata file declares a sample datatype that can't be read."""

    code = "sigmf.datatype"


class NonFiniteSamplesError(LorafpError, ValueError):
    """A buffer holds NaN or Inf samples and can't be written."""

    code = "sigmf.non_finite"


class DatasetMissingError(LorafpError, FileNotFoundError):
    """A scenario's dataset hasn't been generated yet."""

    code = "experiment.missing_dataset"


class SingleClassError(LorafpError, ValueError):
    """A dataset holds frames for fewer than two devices."""

    code = "experiment.single_class"


class DivergenceError(LorafpError, RuntimeError):
    """Training produced a non-finite loss."""

    code = "classifier.divergence"
