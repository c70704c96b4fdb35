"""
Characteristics, focusing and sensors
=====================================

Linear initial speed focuses every characteristic into one point, so a
single sensor there sees them all. A staircase speed keeps whole bands
of characteristics parallel, and no point sees more than a few.
"""

import math

from linedim.charflow import (CharacteristicField, SensorSet, focal_point,
                              observability_check)
from linedim.fractal import CantorStaircase

sensor = SensorSet(points=[(1.0, 1.0)])

affine = CharacteristicField.affine(-1.0, 1.0, s_samples=1000)
print("affine focal point:", focal_point(affine, 1e-9).point)
print("affine coverage:", observability_check(affine, sensor, 2.0, 1000).fraction)

stair = CantorStaircase.from_alpha(math.log(2) / math.log(3))
field = CharacteristicField(stair.g, s_samples=1000)
res = focal_point(field, 1e-3)
print("staircase focal point:", res.point, "spread", round(res.spread, 3))
print("staircase coverage:", observability_check(field, sensor, 2.0, 1000).fraction)

# the initial line itself always sees everything
print("initial data coverage:",
      observability_check(field, SensorSet.initial_segment(), 2.0, 1000).fraction)
