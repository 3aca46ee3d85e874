"""Exception types shared across the package."""


class QkptnError(Exception):
    """Base class for all package errors."""


class InvalidPermutationError(QkptnError):
    pass


class InvalidReshapeError(QkptnError):
    pass


class ContractionMismatchError(QkptnError):
    pass


class InvalidArgumentError(QkptnError):
    pass


class ShapeError(QkptnError):
    pass


class SizeError(QkptnError):
    """Dense conversion requested beyond the configured qubit cap."""


class NormalizationError(QkptnError):
    pass


class TableChainError(QkptnError):
    pass


class DuplicateRuleError(QkptnError):
    pass


class HermiticityError(QkptnError):
    pass


class InsufficientDataError(QkptnError):
    pass


class DegenerateStartError(QkptnError):
    pass
