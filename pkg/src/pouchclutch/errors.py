"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class DomainError(ValidationError):
    """A constitutive law was evaluated outside its domain (e.g. non-positive stretch)."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap without meeting tolerance."""


class CalibrationError(ValidationError):
    """The anchor set cannot identify one of the fitted parameters."""


class InfeasibleGeometryError(ValidationError):
    """Strip lengths describe a bend the backbone cannot realise (kappa * Rc >= 1)."""
