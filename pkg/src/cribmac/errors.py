"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed user input (files, CLI arguments, inconsistent shapes)."""


class BudgetError(RuntimeError):
    """A guard tripped: search space, memory, or sample budget too large/small."""
