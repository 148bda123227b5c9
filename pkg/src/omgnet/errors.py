"""Exception hierarchy.

Every error raised by the package derives from :class:`OMGError` and carries a
short ``category`` string that the command line front-end reports as a
machine-readable tag.
"""


class OMGError(Exception):
    category = "error"


class StructuralError(OMGError):
    """Invalid network topology (bad node ids, self loops, bad line data)."""

    category = "grid"


class ModelError(OMGError):
    """Device or cost data violating its invariants."""

    category = "model"


class ContractError(OMGError):
    """A caller broke an operation's precondition."""

    category = "contract"


class ParameterError(OMGError):
    """Algorithm parameters outside their admissible region."""

    category = "params"


class CertificateError(OMGError):
    category = "certificate"


class LPError(OMGError):
    category = "lp"


class LPInfeasible(LPError):
    """Raised with the phase-one residual as the infeasibility certificate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LPUnbounded(LPError):
    """Raised with the improving ray (variable index and direction)."""

    def __init__(self, message, ray=None):
        super().__init__(message)
        self.ray = ray


class FeasibilityError(OMGError):
    """A storage level left its bounds during an OMG rollout."""

    category = "feasibility"

    def __init__(self, message, t=None, bus=None, level=None):
        super().__init__(message)
        self.t = t
        self.bus = bus
        self.level = level


class SyncError(OMGError):
    """A distributed task ran without the messages it needs."""

    category = "sync"


class PartitionError(OMGError):
    category = "partition"


class ConvergenceError(OMGError):
    """ADMM hit its iteration cap; ``trace`` holds the iterations run."""

    category = "convergence"

    def __init__(self, message, trace=None, solution=None):
        super().__init__(message)
        self.trace = trace
        self.solution = solution


class ScenarioError(OMGError):
    category = "scenario"


class ConfigError(OMGError):
    category = "config"

    def __init__(self, message, key=None):
        if key:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key
