# Exception hierarchy for nf4lut.
#
# Everything deriving from NF4Error is a data error (bad input values, a damaged
# container, a mismatched codebook). The CLI maps these to exit code 2. Bad
# parameters (geometry, Amdahl domain, ...) raise plain ValueError instead.


class NF4Error(Exception):
    """Base class of all data errors raised by nf4lut."""


class NonFiniteValueError(NF4Error, ValueError):
    def __init__(self, position: int | None = None, value=None):
        self.position = position
        self.value = value
        if position is None:
            super().__init__(f"non-finite value: {value}")
        else:
            super().__init__(f"non-finite value at position {position}: {value}")


class NibbleRangeError(NF4Error, ValueError):
    def __init__(self, value, position: int | None = None):
        self.value = value
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"nibble out of range{where}: {value} (expected 0..15)")


class CodebookMismatchError(NF4Error):
    pass


class InvariantViolationError(NF4Error):
    pass


class ContainerError(NF4Error):
    pass


class NotNF4KFileError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedContainerError(ContainerError):
    pass


class CorruptContainerError(ContainerError):
    pass


class BenchAllocationError(NF4Error):
    pass


class RawArrayError(NF4Error, ValueError):
    pass
