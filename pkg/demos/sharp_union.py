"""
A line union of dimension 1 + alpha
===================================

Cover the graph of the staircase integral by slope-2 lines through
Cantor points and one tangent per gap, rasterize, and fit box counts.
The slope-2 lines alone give the countably stable part of the estimate.
"""

import math

from linedim.boxdim import Window, box_counts, fit_dimension, rasterize_lines, write_pgm
from linedim.cli import default_cantor_samples
from linedim.fractal import CantorStaircase
from linedim.linefam import sharp_family

window = Window((0.0, -2.0), (1.0, 2.0))
res = 4096

for alpha in (0.5, math.log(2) / math.log(3), 1.0):
    s = CantorStaircase.from_alpha(alpha, 20)
    fam = sharp_family(s, 10, default_cantor_samples(s, window, res))
    full = fit_dimension(box_counts(rasterize_lines(fam, window, res)))
    a_only = fit_dimension(box_counts(rasterize_lines(fam.select("sharp-A"), window, res)))
    print(f"alpha={alpha:.4f} target={1 + alpha:.4f} lines={len(fam)} "
          f"all={full.slope:.3f} slope-2 part={a_only.slope:.3f}")

# the last grid as an image
write_pgm(rasterize_lines(fam, window, 512), "sharp_union.pgm")
