"""Exception types.

Every error carries a short machine-readable ``code`` (e.g. ``"not_schur"``)
so callers and the CLI can branch on it without parsing messages.
"""


class FeasGovError(Exception):
    exit_code = 1

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class AssumptionError(FeasGovError):
    """A modelling assumption (stabilizability, weights, rank, ...) fails."""

    exit_code = 2


class InvariantViolation(FeasGovError):
    """A closed-loop runtime monitor failed."""

    exit_code = 3

    def __init__(self, code, step, message=""):
        self.step = step
        super().__init__(code, f"step {step}: {message}")


class InfeasibleError(FeasGovError):
    """An optimization or set query has no solution."""

    exit_code = 4


class NumericalError(FeasGovError):
    """Divergence, blowup or ill-conditioning inside a numerical routine."""

    exit_code = 1
