"""Exception hierarchy.

Every error carries a stable ``exit_code`` used by the command line
front end; the table is reproduced in the README.
"""


class LoopShiftError(Exception):
    exit_code = 1


class NegativeCoefficient(LoopShiftError):
    exit_code = 15

    def __init__(self, n, value=None):
        self.n = n
        self.value = value
        msg = f"negative coefficient at degree {n}"
        if value is not None:
            msg += f" ({value})"
        super().__init__(msg)


class ZeroSeries(LoopShiftError):
    exit_code = 26


class PeriodMismatch(LoopShiftError):
    exit_code = 11

    def __init__(self, msg, n=None):
        self.n = n
        super().__init__(msg)


class EntropyAtOrBelowZero(LoopShiftError):
    exit_code = 23


class InconclusiveEntropy(LoopShiftError):
    exit_code = 24


class NotRealizable(LoopShiftError):
    exit_code = 27

    def __init__(self, n):
        self.n = n
        super().__init__(f"orbit count at n={n} is not a nonnegative integer")


class LoopNotFound(LoopShiftError):
    exit_code = 28


class NotIrreducible(LoopShiftError):
    exit_code = 25


class SplitMismatch(LoopShiftError):
    exit_code = 21


class Degenerate(LoopShiftError):
    exit_code = 20


class NoValidN(LoopShiftError):
    exit_code = 14


class PositivityViolated(LoopShiftError):
    exit_code = 16

    def __init__(self, k, length):
        self.k = k
        self.length = length
        super().__init__(
            f"positivity condition fails at deletion step {k}: "
            f"no loop of length {length} left")


class MagicWordUnavailable(LoopShiftError):
    exit_code = 17


class BudgetExceeded(LoopShiftError):
    exit_code = 18


class EntropyMismatch(LoopShiftError):
    exit_code = 10


class NotSPR(LoopShiftError):
    exit_code = 12

    def __init__(self, side, verdict):
        self.side = side
        self.verdict = verdict
        super().__init__(f"{side} side is not SPR (verdict: {verdict})")


class NoValidBeta(LoopShiftError):
    exit_code = 13


class CommonSeriesMismatch(LoopShiftError):
    """Left and right recursions disagree. Indicates a defect."""
    exit_code = 19

    def __init__(self, n):
        self.n = n
        super().__init__(f"common series differ at degree {n}")


class NotRecurrent(LoopShiftError):
    exit_code = 22


class UnknownSymbol(LoopShiftError):
    exit_code = 29


class NoMagicWord(LoopShiftError):
    exit_code = 30


class AmbiguousParse(LoopShiftError):
    """A window decodes in more than one way. Indicates a defect."""
    exit_code = 31


class NotInImage(LoopShiftError):
    exit_code = 32


class ParseError(LoopShiftError):
    exit_code = 2

    def __init__(self, msg, line=1, column=1):
        self.line = line
        self.column = column
        super().__init__(f"{msg} (line {line}, column {column})")
