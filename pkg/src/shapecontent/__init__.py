"""Content invariants for heap-manipulating programs.

Description-logic content annotations layered on separation-logic list
shape annotations, with verification conditions discharged by bounded
model search over memory structures.
"""
from .errors import (KindError, ParseError, PreconditionError, ProgramError, SearchBudgetExceeded,
                     ShapeContentError, StructureFileError, VocabularyError)

__version__ = "0.1.0"

__all__ = [
    "KindError", "ParseError", "PreconditionError", "ProgramError", "SearchBudgetExceeded",
    "ShapeContentError", "StructureFileError", "VocabularyError", "__version__",
]
