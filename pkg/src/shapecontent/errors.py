class ShapeContentError(Exception):
    pass


class VocabularyError(ShapeContentError):
    """A formula or program mentions a symbol the structure does not interpret."""


class PreconditionError(ShapeContentError):
    pass


class KindError(ShapeContentError):
    """Substitution or parse produced an ill-kinded replacement (e.g. role for concept)."""


class ParseError(ShapeContentError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class ProgramError(ShapeContentError):
    """Semantic error in a program graph (duplicate location, bad init, ...)."""


class SearchBudgetExceeded(ShapeContentError):
    """Bounded search gave up before finishing; the verdict is inconclusive."""


class StructureFileError(ShapeContentError):
    def __init__(self, message: str, violations=()):
        self.violations = list(violations)
        super().__init__(message)
