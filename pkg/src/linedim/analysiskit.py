"""Chord iteration with certified bounds, interior certificates and slice scans.

The chord map ``u -> u - J^+ (f(u) - v)`` keeps the Jacobian fixed at the
base point. Inside a trust ball where the linearisation error stays below
``lambda * |u|`` it maps the ball into itself, and every solution obeys

    lambda |u| <= |v - f(0)| <= (|J| + lambda) |u|,   lambda = 1 / (2 |J^+|).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .boxdim import OccupancyGrid, Window, rasterize_planes3
from .errors import ConstructionError, DomainError, NonConvergenceError, NoWitnessError

RESIDUAL_TOL = 1e-10
_POLISH_TOL = 1e-14
_EPS_START = 0.5
_EPS_MIN = 1e-12
_BRACKET_SLACK = 1e-12


def _probe_directions(m: int, count: int = 64, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((count, m))
    dirs = np.vstack([np.eye(m), -np.eye(m), dirs])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


class FixedPointProblem:
    """Solve ``f(u) = v`` near ``u = 0`` for ``f: R^m -> R^n``, ``m >= n``.

    Parameters
    ----------
    f : callable
        Maps an ``(m,)`` array to an ``(n,)`` array.
    J : array_like, shape (n, m)
        Jacobian of ``f`` at 0; must have full row rank.
    eps : float, optional
        Trust radius. By default it is found by halving from 0.5 until the
        linearisation bound ``|f(u) - f(0) - J u| < lambda |u|`` holds on a
        probe set in the ball.
    """

    def __init__(self, f: Callable, J, eps: Optional[float] = None):
        J = np.atleast_2d(np.asarray(J, dtype=float))
        n, m = J.shape
        if m < n:
            raise DomainError(f"need m >= n, got a {n}x{m} Jacobian")
        sv = np.linalg.svd(J, compute_uv=False)
        if sv.min() <= 1e-10:
            raise DomainError("Jacobian is rank deficient")
        self.f = f
        self.J = J
        self.J_pinv = np.linalg.pinv(J)
        self.J_norm = float(sv.max())
        self.lam = float(sv.min()) / 2.0
        self.f0 = np.asarray(f(np.zeros(m)), dtype=float).reshape(n)
        self.eps = float(eps) if eps is not None else self._find_eps()

    @property
    def shape(self):
        return self.J.shape

    def linearisation_ok(self, eps: float) -> bool:
        """Whether the bound on ``|f(u) - f(0) - J u|`` holds on probes of radius ``<= eps``."""
        m = self.J.shape[1]
        for radius in eps * np.array([1.0, 0.5, 0.25, 0.1]):
            for d in _probe_directions(m):
                u = radius * d
                err = np.linalg.norm(np.asarray(self.f(u), float) - self.f0 - self.J @ u)
                if not err < self.lam * radius:
                    return False
        return True

    def _find_eps(self) -> float:
        eps = _EPS_START
        while eps >= _EPS_MIN:
            if self.linearisation_ok(eps):
                return eps
            eps /= 2.0
        raise DomainError("no trust radius satisfies the linearisation bound")


@dataclass(frozen=True)
class ChordSolution:
    u: np.ndarray
    residuals: tuple
    lower: float
    middle: float
    upper: float

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1

    @property
    def bracket_ok(self) -> bool:
        slack = _BRACKET_SLACK * max(1.0, self.upper)
        return self.lower <= self.middle + slack and self.middle <= self.upper + slack

    @property
    def monotone(self) -> bool:
        r = self.residuals
        return all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(r, r[1:]))


def chord_solve(p: FixedPointProblem, v, max_iter: int = 100) -> ChordSolution:
    """Iterate the chord map from ``u = 0`` until ``|f(u) - v| <= 1e-10``.

    Raises :class:`DomainError` if ``v`` is outside the ball of radius
    ``lambda * eps`` around ``f(0)`` and :class:`NonConvergenceError`
    (carrying the residual history) if ``max_iter`` steps do not suffice.
    """
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    v = np.asarray(v, dtype=float).reshape(p.J.shape[0])
    dist = float(np.linalg.norm(v - p.f0))
    if dist > p.lam * p.eps * (1 + 1e-12):
        raise DomainError(f"target at distance {dist:.3g} exceeds lambda*eps = "
                          f"{p.lam * p.eps:.3g}")
    u = np.zeros(p.J.shape[1])
    r = np.asarray(p.f(u), float) - v
    history = [float(np.linalg.norm(r))]
    floor = _POLISH_TOL * max(1.0, float(np.linalg.norm(v)))
    for _ in range(max_iter):
        if history[-1] <= floor:
            break
        # past the tolerance, keep going only while the residual still halves
        if history[-1] <= RESIDUAL_TOL and len(history) > 1 and history[-1] > 0.5 * history[-2]:
            break
        u_next = u - p.J_pinv @ r
        r_next = np.asarray(p.f(u_next), float) - v
        res_next = float(np.linalg.norm(r_next))
        if history[-1] <= RESIDUAL_TOL and res_next > history[-1]:
            break
        u, r = u_next, r_next
        history.append(res_next)
    if history[-1] > RESIDUAL_TOL:
        raise NonConvergenceError(
            f"residual {history[-1]:.3g} after {max_iter} iterations", history)
    unorm = float(np.linalg.norm(u))
    if unorm > p.eps * (1 + 1e-9):
        raise NonConvergenceError(f"iterate left the trust ball (|u| = {unorm:.3g})", history)
    return ChordSolution(u, tuple(history), p.lam * unorm, dist,
                         (p.J_norm + p.lam) * unorm)


@dataclass(frozen=True)
class CertifiedRectangle:
    """Square ``center +- half_width`` of targets, each with a verified preimage."""

    center: tuple
    half_width: float
    base_parameter: tuple
    targets: np.ndarray
    preimages: np.ndarray
    max_forward_error: float
    family: str

    @property
    def lo(self):
        return tuple(float(v) for v in np.subtract(self.center, self.half_width))

    @property
    def hi(self):
        return tuple(float(v) for v in np.add(self.center, self.half_width))


def _family_map(c, a: float, family: str):
    """Map ``(p, x) -> point on line p`` and the base parameter with ``det J = -1``."""
    if family == "dual":
        # lines y = p x + f(p)
        d1 = float(c.df(a))
        if not math.isfinite(d1):
            raise DomainError(f"f'({a}) is not finite")
        x0 = 1.0 - d1

        def phi(q):
            return np.array([q[1], q[0] * q[1] + float(c.f(q[0]))])

        jac = np.array([[0.0, 1.0], [x0 + d1, a]])
    elif family == "tangent":
        # lines y = f'(p)(x - p) + f(p)
        if c.d2f is None:
            raise NoWitnessError("tangent certificate needs f''")
        d1, d2 = float(c.df(a)), float(c.d2f(a))
        if not math.isfinite(d2) or abs(d2) <= 1e-12:
            raise NoWitnessError(f"tangent family is degenerate at p={a} (f'' = 0)")
        x0 = a + 1.0 / d2

        def phi(q):
            return np.array([q[1], float(c.df(q[0])) * (q[1] - q[0]) + float(c.f(q[0]))])

        jac = np.array([[0.0, 1.0], [d2 * (x0 - a), d1]])
    else:
        raise DomainError(f"unknown family {family!r}")
    return phi, np.array([a, x0]), jac


def interior_witness_map(c, a: float, family: str = "dual", grid: int = 9,
                         min_radius: float = 1e-6) -> CertifiedRectangle:
    """Certify an open square inside a one-parameter line union.

    ``family="dual"`` uses the lines ``y = p x + f(p)`` parameterised by
    ``(p, x) -> (x, p x + f(p))``, based at ``(a, 1 - f'(a))`` where the
    Jacobian is ``[[0, 1], [1, a]]``. ``family="tangent"`` uses the tangent
    lines of ``f``, based at ``(a, a + 1/f''(a))`` (also ``det J = -1``).

    A ``grid x grid`` lattice of targets filling the largest square inside
    the chord solver's guaranteed ball is solved; each solution is checked
    by direct evaluation to ``1e-10``. On any failure the square is halved
    until ``min_radius``.
    """
    if grid < 2:
        raise DomainError("grid must be at least 2")
    phi, base, jac = _family_map(c, a, family)
    try:
        prob = FixedPointProblem(lambda u: phi(base + u), jac)
    except DomainError as exc:
        raise NoWitnessError(f"no certificate at p={a}: {exc}") from None
    center = prob.f0
    half = prob.lam * prob.eps / math.sqrt(2.0)
    ticks = np.linspace(-1.0, 1.0, grid)
    while half >= min_radius:
        tx, ty = np.meshgrid(center[0] + half * ticks, center[1] + half * ticks, indexing="ij")
        targets = np.column_stack([tx.ravel(), ty.ravel()])
        pre, errs = [], []
        try:
            for v in targets:
                sol = chord_solve(prob, v)
                q = base + sol.u
                errs.append(float(np.linalg.norm(phi(q) - v)))
                pre.append(q)
        except (NonConvergenceError, DomainError, ArithmeticError, ValueError):
            half /= 2.0
            continue
        worst = max(errs)
        if worst <= RESIDUAL_TOL:
            return CertifiedRectangle(tuple(float(v) for v in center), float(half),
                                      tuple(float(v) for v in base), targets,
                                      np.array(pre), worst, family)
        half /= 2.0
    raise NoWitnessError(f"no certified square of half-width >= {min_radius}")


@dataclass(frozen=True)
class HyperCurve:
    """``f: R^d -> R`` with its gradient; both take ``(..., d)`` arrays."""

    d: int
    f: Callable
    grad: Callable

    @classmethod
    def paraboloid(cls) -> "HyperCurve":
        return cls(2, lambda p: np.sum(np.asarray(p, float) ** 2, axis=-1),
                   lambda p: 2.0 * np.asarray(p, float))

    @classmethod
    def affine(cls, coeffs, offset: float = 0.0) -> "HyperCurve":
        coeffs = np.asarray(coeffs, float)
        return cls(len(coeffs), lambda p: np.asarray(p, float) @ coeffs + offset,
                   lambda p: np.broadcast_to(coeffs, np.shape(p)).copy())


@dataclass(frozen=True)
class SliceResult:
    direction: np.ndarray
    center: np.ndarray
    radius: float


def _candidate_directions(d: int, count: int, seed: int) -> np.ndarray:
    eye = np.eye(d)
    cands = list(eye)
    for i in range(d):
        for j in range(i + 1, d):
            cands.append((eye[i] + eye[j]) / math.sqrt(2.0))
            cands.append((eye[i] - eye[j]) / math.sqrt(2.0))
    rng = np.random.default_rng(seed)
    while len(cands) < count:
        w = rng.standard_normal(d)
        cands.append(w / np.linalg.norm(w))
    return np.array(cands[:max(count, 1)])


def _base_offsets(v: np.ndarray, count: int, radius: float, seed: int) -> np.ndarray:
    d = len(v)
    # orthonormal basis of the complement of v
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(d)]))
    perp = q[:, 1:d]
    if d == 2:
        return np.linspace(-radius, radius, count)[:, None] * perp[:, 0]
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((count, d - 1))
    w *= (radius * rng.random(count) ** (1.0 / (d - 1)) / np.linalg.norm(w, axis=1))[:, None]
    return np.vstack([np.zeros(d), w @ perp.T])


def _slices_nonlinear(h: HyperCurve, v, center, offsets, radius, tol, step) -> bool:
    a = center + offsets
    ts = np.array([-0.5, 0.0, 0.5]) * radius
    for t in ts:
        p = a + t * v
        second = h.f(p - step * v) - 2.0 * h.f(p) + h.f(p + step * v)
        ok = np.abs(second) > tol * step * step
        if t == ts[0]:
            any_ok = ok
        else:
            any_ok = any_ok | ok
    return bool(np.all(any_ok))


def nonlinear_slice_scan(h: HyperCurve, directions: int, base_points: int, tol: float = 1e-4,
                         center=None, radius: float = 0.5, step: float = 1e-3,
                         seed: int = 0) -> Optional[SliceResult]:
    """First direction whose slices through a ball of base points are all nonlinear.

    Candidates are the coordinate axes, the normalised sums and differences
    of axis pairs, then seeded random unit vectors. For each, base points
    spread over the orthogonal complement within ``radius`` of ``center``
    are tested: a slice ``t -> f(a + t v)`` counts as nonlinear when a
    second difference with step ``step`` exceeds ``tol * step**2`` at one
    of three points along it. A hit is re-checked on twice as many base
    points before it is returned.
    """
    if directions < 4 or base_points < 4:
        raise DomainError("need at least 4 directions and 4 base points")
    center = np.zeros(h.d) if center is None else np.asarray(center, float)
    for v in _candidate_directions(h.d, directions, seed):
        offs = _base_offsets(v, base_points, radius, seed)
        if not _slices_nonlinear(h, v, center, offs, radius, tol, step):
            continue
        fine = _base_offsets(v, 2 * base_points, radius, seed + 1)
        if _slices_nonlinear(h, v, center, fine, radius, tol, step):
            return SliceResult(v, center, float(radius))
    return None


def tangent_planes(h: HyperCurve, sample_grid: int, lo=(-1.0, -1.0), hi=(1.0, 1.0)) -> np.ndarray:
    """Coefficients ``(c0, c1, c2)`` of ``z = c0 + c1 x + c2 y`` at grid points."""
    if h.d != 2:
        raise DomainError("tangent planes are rasterized for d = 2 only")
    if sample_grid < 8:
        raise DomainError("sample_grid must be at least 8")
    xs = np.linspace(lo[0], hi[0], sample_grid)
    ys = np.linspace(lo[1], hi[1], sample_grid)
    a = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    fa = np.asarray(h.f(a), dtype=float)
    ga = np.asarray(h.grad(a), dtype=float).reshape(-1, 2)
    bad = ~(np.isfinite(fa) & np.all(np.isfinite(ga), axis=1))
    if bad.any():
        raise ConstructionError(f"non-finite value or gradient at {a[bad][0]}")
    return np.column_stack([fa - np.sum(ga * a, axis=1), ga])


def plane_segments(coeffs, window: Window, res: int):
    """Each plane cut into segments along ``x`` at every voxel-row centre in ``y``.

    Returned as ``(starts, ends)`` for :func:`linedim.boxdim.rasterize_rays3`.
    """
    c = np.asarray(coeffs, float).reshape(-1, 3)
    dy = (window.hi[1] - window.lo[1]) / res
    ys = window.lo[1] + dy * (np.arange(res) + 0.5)
    c0, c1, c2 = (np.repeat(c[:, k], res) for k in range(3))
    y = np.tile(ys, len(c))
    x0, x1 = window.lo[0], window.hi[0]
    starts = np.column_stack([np.full_like(y, x0), y, c0 + c1 * x0 + c2 * y])
    ends = np.column_stack([np.full_like(y, x1), y, c0 + c1 * x1 + c2 * y])
    return starts, ends


def hyperplane_family(h: HyperCurve, sample_grid: int,
                      window: Window = Window((-1.0, -1.0, -1.0), (1.0, 1.0, 2.0)),
                      res: int = 128) -> OccupancyGrid:
    """Voxel grid of the union of tangent planes at ``sample_grid**2`` points of ``[-1, 1]^2``.

    Repeated planes (e.g. every plane of an affine ``f``) are rasterized once.
    """
    planes = np.unique(tangent_planes(h, sample_grid), axis=0)
    return rasterize_planes3(planes, window, res)
