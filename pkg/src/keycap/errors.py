"""Exception hierarchy shared by the numeric and protocol modules."""


class KeycapError(Exception):
    """Base class for all library errors."""

    code = "keycap_error"


class NotPositiveDefinite(KeycapError, ValueError):
    code = "not_positive_definite"


class RankDeficient(KeycapError, ValueError):
    code = "rank_deficient"


class ConvergenceFailure(KeycapError, RuntimeError):
    code = "convergence_failure"


class DimensionMismatch(KeycapError, ValueError):
    code = "dimension_mismatch"


class ConfigError(KeycapError, ValueError):
    code = "config_error"


class InfeasibleRates(KeycapError, ValueError):
    code = "infeasible_rates"


class SizeOverflow(KeycapError, ValueError):
    code = "size_overflow"


class EnumerationTooLarge(KeycapError, ValueError):
    """Exact enumeration would exceed the configured state cap."""

    code = "cap_exceeded"


class InsufficientReplicates(KeycapError, ValueError):
    code = "insufficient_replicates"
