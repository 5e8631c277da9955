"""Exception hierarchy.

Every domain error carries a ``code`` equal to its class name; the CLI and the
simulation log surface that code verbatim.
"""


class AerialDeltaError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


class NotSkewSymmetric(AerialDeltaError, ValueError):
    pass


class SingularMatrix(AerialDeltaError, ArithmeticError):
    pass


class NonFiniteState(AerialDeltaError, ArithmeticError):
    pass


class DegenerateForce(AerialDeltaError, ValueError):
    pass


class SingularCross(AerialDeltaError, ValueError):
    pass


class OutOfParallelogramRange(AerialDeltaError, ValueError):
    pass


class UnreachableTarget(AerialDeltaError, ValueError):
    pass


class BranchSingularity(AerialDeltaError, ValueError):
    pass


class JointLimit(AerialDeltaError, ValueError):
    pass


class NoConvergence(AerialDeltaError, ArithmeticError):
    pass


class AmbiguousSolution(AerialDeltaError, ValueError):
    pass


class DegenerateData(AerialDeltaError, ValueError):
    pass


class ConfigError(AerialDeltaError, ValueError):
    pass
