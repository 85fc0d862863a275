"""Exception hierarchy; the CLI maps each family to an exit code."""


class WkbLabError(Exception):
    pass


class GridError(WkbLabError, ValueError):
    """Grid request out of range, infeasible, or incommensurate with a field."""


class StructureError(WkbLabError, ValueError):
    """A field lacks the structure an operation relies on (reality, zero x-mean, ...)."""


class NumericalFailure(WkbLabError, RuntimeError):
    """CFL violation, non-finite state, or a failed self-consistency check."""


class ConfigError(WkbLabError, ValueError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
