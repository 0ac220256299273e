"""Exception types shared across the package."""

from __future__ import annotations


class FldeepError(Exception):
    """Base class for all package-specific failures."""


class MissingFile(FldeepError):
    """A required bundle file is absent."""

    def __init__(self, path: str) -> None:
        super().__init__(f"missing bundle file: {path}")
        self.path = path


class SchemaViolation(FldeepError):
    """A bundle file exists but a field is missing, mistyped, or malformed."""

    def __init__(self, file: str, field: str, reason: str) -> None:
        super().__init__(f"{file}: field {field!r}: {reason}")
        self.file = file
        self.field = field
        self.reason = reason


class InvariantViolation(FldeepError):
    """Individually well-formed fields that contradict each other."""


class EmptyTrace(FldeepError):
    """No trace carries a single usable value."""


class InsufficientData(FldeepError):
    """Too few training samples to fit the ensemble."""


class LayoutMismatch(FldeepError):
    """Feature layout of the input does not match the model's layout."""


class VersionMismatch(FldeepError):
    """Serialized model was written under an incompatible format version."""


class CorruptModel(FldeepError):
    """Serialized model bytes cannot be decoded."""


class UnboundVariable(FldeepError):
    """A rule references a variable that no premise binds."""

    def __init__(self, rule_id: str, variable: str) -> None:
        super().__init__(f"rule {rule_id}: variable ?{variable} is never bound")
        self.rule_id = rule_id
        self.variable = variable


class KeyMissing(FldeepError):
    """A fault type has no prior assigned."""

    def __init__(self, fault_type: str) -> None:
        super().__init__(f"no prior for fault type {fault_type!r}")
        self.fault_type = fault_type


class InapplicableOperator(FldeepError):
    """A mutation operator cannot be applied to the given bundle."""


class UnknownCategoryMapping(FldeepError):
    """A fault type has no evaluation category assigned."""

    def __init__(self, fault_type: str) -> None:
        super().__init__(f"no category for fault type {fault_type!r}")
        self.fault_type = fault_type
