"""Exception hierarchy shared by all arboreal modules."""


class ArborealError(Exception):
    """Base class for every error raised by this package."""


class CycleError(ArborealError):
    """Input relations force two distinct elements to precede each other."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnreachableError(ArborealError):
    pass


class UnrootedError(ArborealError):
    pass


class MalformedCertificate(ArborealError):
    pass


class InvalidCertificate(ArborealError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleAssignment(ArborealError):
    """A solver assignment breaks one of the flow-model constraint families."""

    def __init__(self, family, message):
        super().__init__(f"constraint family ({family}): {message}")
        self.family = family


class TooLargeError(ArborealError):
    pass


class FormatError(ArborealError):
    pass
