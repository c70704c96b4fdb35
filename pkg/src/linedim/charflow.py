"""Characteristic lines of scalar conservation laws and sensor coverage.

Initial data ``u0`` with flux ``F`` propagates along the spacetime lines
``x = g(s) t + s`` with ``g = F' o u0``. Only these kinematics are
simulated; no weak solution of the PDE is computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ParseError

POINT_TOL = 1e-9


@dataclass(frozen=True)
class CharacteristicField:
    """Initial wave speed ``g`` on ``[0, 1]`` sampled at ``s_samples`` points."""

    g: Callable
    s_samples: int = 64

    def __post_init__(self):
        if self.s_samples < 1:
            raise DomainError("s_samples must be positive")
        vals = np.asarray(self.g(self.samples()), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("wave speed is not finite on every sample")

    def samples(self) -> np.ndarray:
        if self.s_samples == 1:
            return np.array([0.0])
        return np.linspace(0.0, 1.0, self.s_samples)

    def speeds(self, s) -> np.ndarray:
        return np.asarray(self.g(np.asarray(s, dtype=float)), dtype=float)

    @classmethod
    def affine(cls, slope: float, offset: float, s_samples: int = 64):
        """``g(s) = slope * s + offset``."""
        return cls(lambda s: slope * np.asarray(s, float) + offset, s_samples)


@dataclass(frozen=True)
class CharacteristicLine:
    speed: float
    foot: float

    def __call__(self, t):
        return self.speed * np.asarray(t, dtype=float) + self.foot


def characteristic_line(field: CharacteristicField, s: float) -> CharacteristicLine:
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    return CharacteristicLine(float(field.speeds(s)), float(s))


@dataclass(frozen=True)
class FocalResult:
    """``point`` is ``(x, t)`` or None; ``spread`` is the largest deviation."""

    point: Optional[tuple]
    parallel: bool = False
    spread: float = math.inf
    pairs_used: int = 0


def _pairwise_intersections(s: np.ndarray, g: np.ndarray):
    i, j = np.triu_indices(len(s), k=1)
    dg = g[i] - g[j]
    ok = np.abs(dg) >= 1e-12
    t = (s[j][ok] - s[i][ok]) / dg[ok]
    x = g[i][ok] * t + s[i][ok]
    return x, t


def focal_point(field: CharacteristicField, tol: float, s_values=None) -> FocalResult:
    """Common intersection point of all sampled characteristics, if any.

    Pairs with equal speeds are parallel and skipped. A focal point is
    reported when every pairwise intersection lies within ``tol`` of their
    median (max-norm in ``(x, t)``).
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    s = field.samples() if s_values is None else np.asarray(s_values, dtype=float)
    if len(s) < 3:
        raise DomainError("need at least 3 characteristics")
    x, t = _pairwise_intersections(s, field.speeds(s))
    if x.size == 0:
        return FocalResult(None, parallel=True)
    cx, ct = float(np.median(x)), float(np.median(t))
    spread = float(max(np.max(np.abs(x - cx)), np.max(np.abs(t - ct))))
    point = (cx, ct) if spread <= tol else None
    return FocalResult(point, False, spread, int(x.size))


def dual_map(x: float, t: float) -> tuple:
    """Spacetime point to the ``(slope, intercept)`` of its dual line, ``(-1/t, x/t)``.

    ``(x, t)`` lies on the characteristic of ``s`` exactly when
    ``g(s) = slope * s + intercept``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")
    return (-1.0 / t, x / t)


@dataclass(frozen=True)
class SensorSet:
    """Finite union of spacetime points ``(x, t)`` and closed boxes ``(x0, x1, t0, t1)``."""

    points: tuple = ()
    boxes: tuple = ()

    def __post_init__(self):
        pts = tuple((float(x), float(t)) for x, t in self.points)
        bxs = tuple(tuple(float(v) for v in b) for b in self.boxes)
        for x, t in pts:
            if t < 0 or not (math.isfinite(x) and math.isfinite(t)):
                raise DomainError(f"sensor point ({x}, {t}) must be finite with t >= 0")
        for b in bxs:
            if len(b) != 4 or b[1] < b[0] or b[3] < b[2] or b[2] < 0:
                raise DomainError(f"malformed sensor box {b}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "boxes", bxs)

    def union(self, other: "SensorSet") -> "SensorSet":
        return SensorSet(self.points + other.points, self.boxes + other.boxes)

    @classmethod
    def initial_segment(cls) -> "SensorSet":
        return cls(boxes=((0.0, 1.0, 0.0, 0.0),))


def read_sensors(path) -> SensorSet:
    """Parse ``P x t`` and ``B x0 x1 t0 t1`` records; ``#`` starts a comment."""
    points, boxes = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            kind, args = parts[0], parts[1:]
            want = {"P": 2, "B": 4}.get(kind)
            if want is None or len(args) != want:
                raise ParseError(f"expected 'P x t' or 'B x0 x1 t0 t1', got {text!r}", lineno)
            try:
                vals = [float(v) for v in args]
            except ValueError:
                raise ParseError(f"non-numeric sensor record {text!r}", lineno) from None
            try:
                SensorSet(points=[vals] if kind == "P" else (), boxes=[vals] if kind == "B" else ())
            except DomainError as exc:
                raise ParseError(str(exc), lineno) from None
            (points if kind == "P" else boxes).append(vals)
    return SensorSet(points, boxes)


@dataclass(frozen=True)
class CoverageReport:
    s: np.ndarray
    covered: np.ndarray

    @property
    def fraction(self) -> float:
        return float(np.mean(self.covered)) if self.covered.size else 0.0

    @property
    def uncovered(self) -> list:
        return [float(v) for v in self.s[~self.covered]]

    def lines(self) -> list:
        return [f"s={float(s)!r} covered={int(c)}" for s, c in zip(self.s, self.covered)]


def observability_check(field: CharacteristicField, sensors: SensorSet, horizon: float,
                        s_grid: int) -> CoverageReport:
    """Which characteristics meet a sensor within ``0 <= t <= horizon``.

    Point sensors count when the segment passes within ``1e-9`` of them
    (Euclidean distance in the ``(x, t)`` plane); boxes are closed.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    if s_grid < 1:
        raise DomainError("s_grid must be positive")
    s = np.linspace(0.0, 1.0, int(s_grid)) if s_grid > 1 else np.array([0.0])
    g = field.speeds(s)
    covered = np.zeros(s.shape, dtype=bool)
    for px, pt in sensors.points:
        # closest point of the segment (g t + s, t), t in [0, horizon]
        tc = np.clip((pt + g * (px - s)) / (1.0 + g * g), 0.0, horizon)
        dist = np.hypot(g * tc + s - px, tc - pt)
        covered |= dist <= POINT_TOL
    for x0, x1, t0, t1 in sensors.boxes:
        lo, hi = max(t0, 0.0), min(t1, horizon)
        if hi < lo:
            continue
        xa, xb = g * lo + s, g * hi + s
        covered |= (np.maximum(xa, xb) >= x0) & (np.minimum(xa, xb) <= x1)
    return CoverageReport(s, covered)


def characteristic_rows(field: CharacteristicField, s_values=None) -> list:
    """``(s, slope, intercept)`` rows with ``x = slope * t + intercept``."""
    s = field.samples() if s_values is None else np.asarray(s_values, dtype=float)
    return [(float(si), float(gi), float(si)) for si, gi in zip(s, field.speeds(s))]


def write_characteristics_csv(field: CharacteristicField, path, s_values=None) -> None:
    with open(path, "w") as fh:
        fh.write("s,slope,intercept\n")
        for s, a, b in characteristic_rows(field, s_values):
            fh.write(f"{s!r},{a!r},{b!r}\n")


def singular_part_diagnostic(c, h_values: Sequence[float], threshold: float,
                             samples: int = 1 << 16) -> list:
    """Fraction of ``[h, 1 - h]`` where ``|f'(x+h) - f'(x-h)| / 2h > threshold``.

    Sampled at ``samples`` midpoints per ``h``. When ``f''`` is a singular
    measure the fraction tends to 0 as ``h`` shrinks; an absolutely
    continuous nonzero part keeps it bounded below.
    """
    hs = [float(h) for h in h_values]
    if any(h <= 0 or h >= 0.5 for h in hs):
        raise DomainError("h values must lie in (0, 1/2)")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise DomainError("h values must be strictly decreasing")
    if threshold <= 0:
        raise DomainError("threshold must be positive")
    out = []
    for h in hs:
        x = h + (1.0 - 2.0 * h) * (np.arange(samples) + 0.5) / samples
        q = np.abs(np.asarray(c.df(x + h), float) - np.asarray(c.df(x - h), float)) / (2.0 * h)
        out.append((h, float(np.mean(q > threshold))))
    return out
