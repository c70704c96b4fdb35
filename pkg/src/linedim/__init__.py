"""Line-family unions, Cantor staircases and box-counting dimension estimates."""

__version__ = "0.1.0"

from .errors import (ConstructionError, CurvatureSingularityError, DomainError,
                     EmptyFamilyError, FormError, HypothesisViolationError,
                     InsufficientScalesError, LinedimError, NonConvergenceError,
                     NoWitnessError, ParseError)
from .fractal import CantorSet, CantorStaircase, cantor_ratio
from .linefam import Line2, LineFamily, ScalarCurve
from .boxdim import DimensionEstimate, OccupancyGrid, Window
