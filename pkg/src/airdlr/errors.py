"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input broke a documented precondition."""


class InfeasibleError(RuntimeError):
    """No solution exists (or could be certified) under the given constraints."""


class DegenerateChannelError(ContractViolation):
    """A channel with zero effective gain makes the problem ill-posed."""


class IdxFormatError(ValueError):
    """An IDX data file failed to parse."""


class IdxMagicError(IdxFormatError):
    """Bad magic number at the head of an IDX file."""


class IdxCountMismatchError(IdxFormatError):
    """Image and label files disagree on the sample count."""
