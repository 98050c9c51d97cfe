"""Exception types shared across the package."""


class VQCLotteryError(Exception):
    """Base class for all package errors."""


class ConfigError(VQCLotteryError, ValueError):
    """Invalid model, training or experiment configuration."""


class ContractError(VQCLotteryError, ValueError):
    """A caller violated an operation's preconditions (shapes, ranges)."""


class ResourceError(VQCLotteryError, ValueError):
    """A request exceeds the supported resource envelope."""


class NumericError(VQCLotteryError, ArithmeticError):
    """A loss or gradient became non-finite."""


class ParseError(ContractError):
    """A data file row could not be parsed."""


class SchemaError(ContractError):
    """A data file does not match its declared layout."""
