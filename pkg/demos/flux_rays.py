"""
Rays leaving a cube
===================

A boundary field with positive flux points outward somewhere; the rays
leaving that patch fill a solid, and the voxel count scales like the
cube of the resolution.
"""

import numpy as np

from linedim.boxdim import Window, estimate_dimension, rasterize_rays3
from linedim.kakeya3d import (BoundaryField, projective_phi, ray_phi_image, ray_segments,
                              total_flux, transversal_face_subset, unit_cube_faces)

faces = unit_cube_faces()
top = BoundaryField.from_function(
    faces, lambda p, i: np.array([0.0, 0.0, 1.0]) if i == 5 else np.zeros(3), 64)
print("flux:", total_flux(top))

subset = transversal_face_subset(top)
grid = rasterize_rays3(ray_segments(subset, 1.0), Window((-2,) * 3, (2,) * 3), 128)
print(estimate_dimension(grid).report())

# phi sends the vertical-speed ray from (x, y, 0) to an open ray from (f, g, 0)
img = ray_phi_image((0.5, -0.25, 0.0), (1.0, 2.0, 1.0))
rho = np.sqrt(0.5 ** 2 + 0.25 ** 2 + 1)
print(img.point(rho / 2.0), "==", projective_phi(0.5 + 2.0, -0.25 + 4.0, 2.0))
