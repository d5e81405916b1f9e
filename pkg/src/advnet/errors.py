class AdvnetError(Exception):
    """Base class for errors raised by advnet."""


class UsageError(AdvnetError, ValueError):
    """A caller passed arguments that violate an operation's preconditions."""


class ConfigurationError(AdvnetError, ValueError):
    """A network, adversary or code configuration cannot be realised."""


class NetworkFormatError(AdvnetError, ValueError):
    """A network or scenario file failed to parse.

    ``lineno`` is 1-based, or None when the problem is not tied to a line.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DecodeFailure(AdvnetError):
    """A destination could not solve for the message.

    ``reason`` is ``"insufficient"`` (fewer valid packets than the rate) or
    ``"rank-deficient"`` (enough packets, but their coefficient headers do
    not span the message space).
    """

    def __init__(self, reason, rank=None):
        self.reason = reason
        self.rank = rank
        super().__init__(f"decode failed: {reason}" + ("" if rank is None else f" (rank {rank})"))
