"""Exception hierarchy.

Errors fall into three families so callers (the CLI in particular) can map
them to exit codes: bad input data, numerical failure, and everything else.
"""


class GrafairError(Exception):
    """Base class for every error raised by this package."""


class DataError(GrafairError, ValueError):
    """Input data violates a structural contract."""


class IndexOutOfRange(DataError, IndexError):
    pass


class NonBinaryColumn(DataError):
    pass


class EmptyGraph(DataError):
    pass


class MissingFile(DataError, FileNotFoundError):
    pass


class ParseError(DataError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}, line {line}: {message}")


class InvalidParameter(GrafairError, ValueError):
    pass


class NegativeStd(InvalidParameter):
    pass


class InvalidBeta(InvalidParameter):
    pass


class UnknownVariant(InvalidParameter):
    pass


class ShapeMismatch(GrafairError, ValueError):
    pass


class NonScalarRoot(GrafairError, ValueError):
    pass


class EmptyMask(DataError):
    pass


class EmptyTrainMask(EmptyMask):
    pass


class DegenerateGroup(DataError):
    """A sensitive group needed by a fairness metric has no members."""


class NumericalError(GrafairError, ArithmeticError):
    pass


class NonFiniteInput(NumericalError):
    pass


class NonFiniteLoss(NumericalError):
    def __init__(self, epoch, value):
        self.epoch = epoch
        self.value = value
        super().__init__(f"loss became non-finite ({value}) at epoch {epoch}")
