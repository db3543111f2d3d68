"""Exception hierarchy shared by all modules."""


class OttoCavityError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(OttoCavityError, ValueError):
    pass


class ContractViolationError(OttoCavityError, ValueError):
    pass


class InvalidArgumentError(OttoCavityError, ValueError):
    pass


class NoCrossingError(OttoCavityError):
    """No interior gap minimum was found for the requested level pair."""


class InvalidGapError(OttoCavityError, ValueError):
    pass


class DivergenceError(OttoCavityError, FloatingPointError):
    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"non-finite density matrix at t={t:.6g}")


class FirstLawError(OttoCavityError):
    pass


class NoHeatInputError(OttoCavityError, ValueError):
    pass


class ConfigError(OttoCavityError, ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
