"""Exception hierarchy shared by every relsurf module."""


class RelsurfError(Exception):
    """Base class for all library errors."""


class NotEnabled(RelsurfError):
    """A vertex was fired on a surface that does not hold all of its inputs."""


class LabelClash(RelsurfError):
    pass


class DimensionMismatch(RelsurfError):
    pass


class UnknownLabel(RelsurfError):
    pass


class NotIsometric(RelsurfError):
    pass


class UnknownSurface(RelsurfError):
    pass


class NoCommonSurface(RelsurfError):
    """No spacelike surface contains all of the requested edges."""

    def __init__(self, message, edges=(), index=None):
        super().__init__(message)
        self.edges = tuple(edges)
        self.index = index


class UnknownAtom(RelsurfError):
    pass


class UnknownName(RelsurfError):
    pass


class ValidationError(RelsurfError):
    pass


class ParseError(RelsurfError):
    """Malformed input text. Carries a 1-based line and column."""

    def __init__(self, reason, line=None, column=None, source=None):
        self.reason = reason
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self._render())

    def _render(self):
        where = ""
        if self.source:
            where += f"{self.source}:"
        if self.line is not None:
            where += f"{self.line}:{self.column}:"
        return f"{where} {self.reason}" if where else self.reason
