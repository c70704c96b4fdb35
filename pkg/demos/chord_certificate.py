"""
Chord iteration with a two-sided bound
======================================

Solve ``f(u) = v`` near 0 with the Jacobian frozen at the base point and
compare each solution's size with the distance of ``v`` from ``f(0)``.
"""

import numpy as np

from linedim.analysiskit import FixedPointProblem, HyperCurve, chord_solve, nonlinear_slice_scan

p = FixedPointProblem(lambda u: np.array([u[0] + u[1] ** 2, u[1]]), np.eye(2))
print(f"lambda={p.lam:.3f} eps={p.eps:.4g} |J|={p.J_norm:.3f}")

# targets must lie within lambda * eps of f(0)
for v in ([0.05, 0.03], [-0.06, 0.08], [0.0, -0.12]):
    sol = chord_solve(p, v)
    print(v, "->", np.round(sol.u, 12), f"iterations={sol.iterations}",
          f"{sol.lower:.4f} <= {sol.middle:.4f} <= {sol.upper:.4f}")

# a direction along which f(x, y) = xy is curved everywhere
xy = HyperCurve(2, lambda q: q[..., 0] * q[..., 1], lambda q: q[..., ::-1])
print("slice direction for xy:", nonlinear_slice_scan(xy, 8, 16).direction)
