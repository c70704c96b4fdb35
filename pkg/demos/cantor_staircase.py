"""
Cantor staircase and its integral
=================================

Build the two-branch Cantor set for a Hoelder exponent, evaluate the
staircase ``g`` and its integral ``f``, and check a few known values.
"""

import math

import numpy as np

from linedim import CantorStaircase

alpha = math.log(2) / math.log(3)
s = CantorStaircase.from_alpha(alpha, depth=24)
print(s, "ratio =", s.ratio)

# g is flat on every gap; the central gap sits at level 1/2
x = np.array([0.0, 0.2, 0.4, 0.5, 0.8, 1.0])
print("g:", np.round(s.g(x), 6))

# f(1) is the mean of g, which is 1/2 by symmetry
print("f(1) =", s.f(1.0), " f(1/3) =", s.f(1 / 3), "(expect 1/12)")

# empirical Hoelder constant of g over random pairs
from linedim.fractal import hoelder_ratio_scan
print("sup |g(x)-g(y)|/|x-y|^alpha ~", round(hoelder_ratio_scan(s, 200_000, seed=0), 4))

# at alpha = 1 the set is the whole interval and f(x) = x^2 / 2
flat = CantorStaircase.from_alpha(1.0)
print("alpha=1:", flat.f(0.6), "vs", 0.6 ** 2 / 2)
