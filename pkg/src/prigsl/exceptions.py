"""Exception hierarchy.

Every error carries a short ``category`` string; the CLI prints it as the
machine-parsable prefix of its one-line error report.
"""


class PriGslError(Exception):
    category = "error"


class InvalidGraph(PriGslError, ValueError):
    category = "invalid-graph"


class EmptyGraph(PriGslError, ValueError):
    category = "empty-graph"


class InvalidProbability(PriGslError, ValueError):
    category = "invalid-probability"


class NotEnoughNonEdges(PriGslError, ValueError):
    category = "not-enough-non-edges"


class NonConvergence(PriGslError, RuntimeError):
    category = "non-convergence"


class NonFiniteValue(PriGslError, FloatingPointError):
    category = "non-finite-value"


class InvalidScale(PriGslError, ValueError):
    category = "invalid-scale"


class DimensionMismatch(PriGslError, ValueError):
    category = "dimension-mismatch"


class ShapeMismatch(DimensionMismatch):
    category = "shape-mismatch"


class ZeroNormRow(PriGslError, FloatingPointError):
    category = "zero-norm-row"


class MissingCache(PriGslError, RuntimeError):
    category = "missing-cache"


class EmptyMask(PriGslError, ValueError):
    category = "empty-mask"


class NonFiniteGradient(PriGslError, FloatingPointError):
    category = "non-finite-gradient"


class DivergedTraining(PriGslError, FloatingPointError):
    category = "diverged-training"


class ConfigError(PriGslError, ValueError):
    category = "config"


class ParseError(PriGslError, ValueError):
    category = "parse"
