"""
Tangent lines that fill an open set
===================================

For a strictly convex ``f`` the tangent lines sweep out a region with
interior. The raster search finds a full block of cells; the chord
solver certifies an open square by solving for a line through each
target point.
"""

from linedim.analysiskit import interior_witness_map
from linedim.boxdim import Window, interior_witness, rasterize_lines
from linedim.errors import NoWitnessError
from linedim.linefam import ScalarCurve, tangent_family

window = Window((0.0, -1.0), (1.0, 1.0))

for curve in (ScalarCurve.parabola(), ScalarCurve.cubic(), ScalarCurve.linear()):
    grid = rasterize_lines(tangent_family(curve, 512), window, 256)
    wit = interior_witness(grid, 16)
    print(curve.name, "raster block:", None if wit is None else (wit.lo, wit.hi))
    try:
        rect = interior_witness_map(curve, 0.5, family="tangent")
        print("   certified square", rect.lo, rect.hi, "max error", rect.max_forward_error)
    except NoWitnessError as exc:
        print("   no certificate:", exc)
