"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
1 input error, 2 scene validity failure, 3 radius regime refusal,
4 internal verification failure.
"""

from __future__ import annotations

from typing import Any


class LayerStackError(Exception):
    """Base class; ``details`` holds machine-readable diagnostics."""

    exit_code = 4

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details


# input
class SceneError(LayerStackError):
    exit_code = 1


class NotUnitVector(LayerStackError, ValueError):
    exit_code = 1


# scene validity
class TrichotomyViolation(LayerStackError):
    exit_code = 2


class DuplicateShape(LayerStackError):
    exit_code = 2


class Inconclusive(LayerStackError):
    exit_code = 2


class OutsideComposite(LayerStackError):
    exit_code = 2


# radius regime
class RadiusOutOfRegime(LayerStackError):
    exit_code = 3


class SmallnessViolation(RadiusOutOfRegime):
    pass


class MultipleCrossings(RadiusOutOfRegime):
    pass


class MarginViolation(RadiusOutOfRegime):
    pass


class EscapeFromBall(RadiusOutOfRegime):
    pass


class UnionNotInS(RadiusOutOfRegime):
    pass


class MoreThanTwoClusters(RadiusOutOfRegime):
    pass


class PreconditionViolation(RadiusOutOfRegime):
    pass


class BallNotInside(RadiusOutOfRegime):
    pass


class CenterNotOnBoundary(RadiusOutOfRegime):
    pass


# numerical / internal
class NoBoundaryInBall(LayerStackError):
    pass


class NewtonStall(LayerStackError):
    pass


class AmbiguousOrientation(LayerStackError):
    pass


class OrientationMismatch(LayerStackError):
    pass


class NotOnBoundary(LayerStackError):
    pass


class SamplingInconclusive(LayerStackError):
    pass


class StackOrderViolation(LayerStackError):
    pass


class OnInterface(LayerStackError):
    pass
