"""Exception hierarchy shared by every module."""


class CfxError(Exception):
    """Base class; ``reason`` is the short machine-readable tag used by the CLI."""

    @property
    def reason(self):
        return type(self).__name__


# input / validation problems (CLI exit code 3)
class InputError(CfxError):
    pass


class DimensionMismatch(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


class UnsupportedFamily(InputError):
    pass


class InvalidTarget(InputError):
    pass


class EmptyDataset(InputError):
    pass


class InconsistentPath(InputError):
    pass


class EvaluationError(InputError):
    """Model cannot be evaluated at the given point (e.g. pole of the exponential GLM)."""


# numerical failures
class NotPositiveDefinite(CfxError):
    pass


class NoConvergence(CfxError):
    pass


class SubproblemFailure(CfxError):
    pass


# "no counterfactual" outcomes (CLI exit code 2)
class NoCounterfactual(CfxError):
    pass


class Infeasible(NoCounterfactual):
    pass


class NoSuchPrediction(NoCounterfactual):
    pass


class NotFound(NoCounterfactual):
    pass


class NoPrototypeForTarget(NoCounterfactual):
    pass
