"""Exception types shared across the audit engine."""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all engine errors."""


class ConfigError(AuditError):
    """A config file or parameter set violates its documented invariants."""


class MissingColumn(AuditError):
    def __init__(self, name: str):
        super().__init__(f"required column not present: {name!r}")
        self.name = name


class NonBinaryTarget(AuditError):
    """Target column does not yield two classes after positive-label mapping."""


class EmptyTable(AuditError):
    """No usable rows remain after loading."""


class DegenerateSplit(AuditError):
    """A split left one side empty, or a side missing a group or a label."""


class SingleClassTrainSet(AuditError):
    """Training rows contain only one label value."""


class ColumnMismatch(AuditError):
    """Matrix columns do not match the encoder a model was trained with."""


class LengthMismatch(AuditError):
    """Paired vectors have different lengths."""


class MissingGroup(AuditError):
    """A group vector lacks one of the two groups."""


class EmptyCell(AuditError):
    def __init__(self, group: int, label: int):
        super().__init__(f"empty (group={group}, label={label}) cell; reweighing undefined")
        self.group = group
        self.label = label


class EmptyPool(AuditError):
    """A search plan produced no candidate models."""


class UnknownId(AuditError):
    def __init__(self, model_id: str):
        super().__init__(f"no model with id {model_id!r} in pool")
        self.model_id = model_id


class NoOffFrontierCandidate(AuditError):
    def __init__(self, eps: float):
        super().__init__(f"no off-frontier model within {eps} of max accuracy")
        self.eps = eps


class IncompleteReport(AuditError):
    """Report is missing content required for serialization."""
