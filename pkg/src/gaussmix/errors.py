"""Exception and warning types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ValidityError(ValueError):
    """A closed form is invoked outside its range of validity."""


class ShapeError(ValueError):
    """Array shapes do not agree."""


class SymmetryError(ValueError):
    """A matrix expected to be symmetric is not."""


class SingularError(ValueError):
    """A linear system that must be solved exactly is singular."""


class DegenerateError(ValueError):
    """Input data is degenerate for the requested operation."""


class ParseError(ValueError):
    """A data file could not be parsed. Carries the 1-based row and column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class RankWarning(UserWarning):
    """A least-squares system was numerically singular; a pseudo-inverse was used."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
