"""
Named exceptions. Bad arguments also derive from ValueError so callers that
only know about the builtin still catch them.
"""


class CycleKernelError(Exception):
    pass


# probspace
class NegativeMass(CycleKernelError, ValueError):
    pass

class SumOutOfTolerance(CycleKernelError, ValueError):
    pass

class DuplicateLabel(CycleKernelError, ValueError):
    pass

class NegativeDensity(CycleKernelError, ValueError):
    pass

class ZeroTotalMass(CycleKernelError, ValueError):
    pass

class UnsupportedDim(CycleKernelError, ValueError):
    pass

class EmptySpace(CycleKernelError, ValueError):
    pass


# maps
class UnknownLabel(CycleKernelError, KeyError):
    pass

class NotTotal(CycleKernelError, ValueError):
    pass

class NonpositiveLength(CycleKernelError, ValueError):
    pass

class OverlappingIntervals(CycleKernelError, ValueError):
    pass

class UnequalMasses(CycleKernelError, ValueError):
    pass

class NotSpecialOrthogonal(CycleKernelError, ValueError):
    pass

class MissingInverse(CycleKernelError, ValueError):
    pass

class MissingJacobian(CycleKernelError, ValueError):
    pass

class DimensionMismatch(CycleKernelError, ValueError):
    pass

class OutsideDomain(CycleKernelError, ValueError):
    pass

class TargetBoxTooSmall(CycleKernelError, ValueError):
    pass


# divergence / cycleloss
class UnknownDivergence(CycleKernelError, ValueError):
    pass

class LabelMismatch(CycleKernelError, ValueError):
    pass

class GridMismatch(CycleKernelError, ValueError):
    pass

class AmbientMismatch(CycleKernelError, ValueError):
    pass


# kernel / perturbation
class TooLarge(CycleKernelError, ValueError):
    pass

class NotAutomorphism(CycleKernelError, ValueError):
    pass

class NotExactSolution(CycleKernelError, ValueError):
    pass


# trainer / cli
class DivergedLoss(CycleKernelError, ArithmeticError):
    def __init__(self, step, loss):
        super().__init__(f"non-finite or exploding loss {loss} at step {step}")
        self.step = step
        self.loss = loss

class MinSeeds(CycleKernelError, ValueError):
    pass

class ConfigError(CycleKernelError, ValueError):
    pass
