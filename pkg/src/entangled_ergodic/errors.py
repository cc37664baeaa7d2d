"""Exception hierarchy shared by every module."""


class EntangledError(Exception):
    """Base class for all library errors."""


class ValidationError(EntangledError, ValueError):
    """An input violates a documented precondition."""


class NotDunfordSchwartzError(ValidationError):
    """An operator fails the L1 / L-infinity contraction check."""

    def __init__(self, name, norm_l1, norm_linf, tol):
        self.name = name
        self.norm_l1 = norm_l1
        self.norm_linf = norm_linf
        super().__init__(
            f"operator {name!r} is not Dunford-Schwartz within tol={tol:g}: "
            f"||.||_1->1 = {norm_l1:.17g}, ||.||_inf->inf = {norm_linf:.17g}"
        )


class MeasureNotPreservedError(ValidationError):
    """An atom map does not preserve the atom masses."""

    def __init__(self, atom, expected, got):
        self.atom = atom
        super().__init__(
            f"map does not preserve the measure at atom {atom}: "
            f"mass {expected:.17g}, preimage mass {got:.17g}"
        )


class DefectiveSpectrumError(EntangledError):
    """A unimodular eigenvalue has a nontrivial Jordan block."""


class BudgetError(EntangledError, RuntimeError):
    """A computation would exceed a configured work or memory budget."""
