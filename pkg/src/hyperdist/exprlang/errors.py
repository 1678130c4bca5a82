class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    """Malformed source text.  `position` is a 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


class UnknownIdentifier(ExprSyntaxError):
    pass


class DimensionError(ExprSyntaxError):
    pass


class ExponentError(ExprSyntaxError):
    pass


class DomainError(ExprError):
    """Evaluation requested outside the net's domain."""
