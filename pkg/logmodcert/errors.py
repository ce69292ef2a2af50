"""Exception types shared by the certification modules."""


class CertError(RuntimeError):
    pass


class DimensionMismatchError(CertError, ValueError):
    pass


class ObstacleContactError(CertError, ValueError):
    """A point that must stay off the obstacle set lies on it."""


class CodimensionError(CertError, ValueError):
    pass


class DomainError(CertError, ValueError):
    """A point or ball is outside the domain it was queried against."""


class ParameterError(CertError, ValueError):
    pass


class HypothesisError(CertError):
    """A hypothesis measured on data (modulus, positivity) does not hold."""


class ConfigError(CertError):
    pass


class UsageError(CertError):
    """Bad command line (unknown flag, missing action)."""
