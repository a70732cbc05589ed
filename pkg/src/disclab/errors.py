"""Exception classes shared across the library."""


class FormParseError(ValueError):
    """Raised when a polynomial expression cannot be parsed.

    `position` is the character offset of the offending token, or None
    when the error is not positional (e.g. mixed degrees).
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class MixedDegreeError(FormParseError):
    """Input polynomial mixes terms of different total degree."""


class DegenerateActionError(ValueError):
    """The form vanishes (or nearly vanishes) somewhere on the unit sphere,
    so exp(-g) is not integrable-with-compact-sublevel-sets and all
    level-set integrals blow up.
    """

    def __init__(self, message, sphere_min=None):
        super().__init__(message)
        self.sphere_min = sphere_min


class QuadratureError(RuntimeError):
    """Quadrature failed to converge or hit a non-finite integrand value."""


class FactorizationError(RuntimeError):
    """A moment matrix is singular or too ill-conditioned to factor.

    `condition` carries the condition-number estimate when available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
