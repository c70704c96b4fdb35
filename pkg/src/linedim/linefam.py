"""Planar line families: tangents, normals and the sharp covering family.

Lines are stored in slope-intercept form ``y = a x + b``; every family
built here is a graph over ``x`` so vertical lines never arise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import (ConstructionError, CurvatureSingularityError, DomainError,
                     EmptyFamilyError, HypothesisViolationError, ParseError)
from .fractal import CantorStaircase

PROVENANCES = ("tangent", "normal", "sharp-A", "sharp-B", "custom")

_SLOPE_EPS = 1e-9
_FD_STEP = 1e-5


@dataclass(frozen=True)
class Line2:
    slope: float
    intercept: float

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ConstructionError(
                f"line components must be finite, got ({self.slope}, {self.intercept})")

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


class LineFamily:
    """Immutable finite collection of lines, each tagged with a provenance.

    Parameters
    ----------
    slopes, intercepts : array_like
        Equal-length 1-D arrays.
    provenance : str or sequence of str
        One tag for the whole family, or one per line.
    """

    def __init__(self, slopes, intercepts, provenance="custom"):
        a = np.array(slopes, dtype=float).ravel()
        b = np.array(intercepts, dtype=float).ravel()
        if a.shape != b.shape:
            raise ConstructionError("slopes and intercepts differ in length")
        if a.size == 0:
            raise EmptyFamilyError("a line family must contain at least one line")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            bad = int(np.flatnonzero(~(np.isfinite(a) & np.isfinite(b)))[0])
            raise ConstructionError(f"line {bad} has a non-finite component")
        if isinstance(provenance, str):
            tags = np.full(a.size, provenance, dtype=object)
        else:
            tags = np.array(list(provenance), dtype=object)
            if tags.size != a.size:
                raise ConstructionError("provenance list differs in length from lines")
        for tag in set(tags):
            if tag not in PROVENANCES:
                raise ConstructionError(f"unknown provenance {tag!r}")
        a.setflags(write=False)
        b.setflags(write=False)
        tags.setflags(write=False)
        self._a, self._b, self._tags = a, b, tags

    @classmethod
    def from_lines(cls, lines: Iterable[Line2], provenance="custom") -> "LineFamily":
        lines = list(lines)
        return cls([l.slope for l in lines], [l.intercept for l in lines], provenance)

    @property
    def slopes(self) -> np.ndarray:
        return self._a

    @property
    def intercepts(self) -> np.ndarray:
        return self._b

    @property
    def provenance(self) -> np.ndarray:
        return self._tags

    def __len__(self):
        return self._a.size

    def __iter__(self):
        for a, b in zip(self._a, self._b):
            yield Line2(float(a), float(b))

    def __getitem__(self, i) -> Line2:
        return Line2(float(self._a[i]), float(self._b[i]))

    def select(self, tag: str) -> "LineFamily":
        mask = self._tags == tag
        return LineFamily(self._a[mask], self._b[mask], self._tags[mask])

    def union(self, other: "LineFamily") -> "LineFamily":
        return LineFamily(np.concatenate([self._a, other._a]),
                          np.concatenate([self._b, other._b]),
                          np.concatenate([self._tags, other._tags]))

    def __repr__(self):
        kinds = sorted(set(self._tags))
        return f"LineFamily({len(self)} lines, provenance={kinds})"


@dataclass(frozen=True)
class ScalarCurve:
    """A function on ``[0, 1]`` with its derivative and optional second derivative.

    Evaluators must accept numpy arrays. ``name`` is informational.
    """

    f: Callable
    df: Callable
    d2f: Optional[Callable] = None
    name: str = "curve"

    def second_derivative(self, t):
        """``f''(t)``, falling back to a centred difference of ``f'``."""
        if self.d2f is not None:
            return self.d2f(t)
        t = np.asarray(t, dtype=float)
        return (self.df(t + _FD_STEP) - self.df(t - _FD_STEP)) / (2 * _FD_STEP)

    @classmethod
    def parabola(cls) -> "ScalarCurve":
        return cls(lambda x: np.asarray(x, float) ** 2,
                   lambda x: 2.0 * np.asarray(x, float),
                   lambda x: np.full_like(np.asarray(x, float), 2.0),
                   name="parabola")

    @classmethod
    def cubic(cls) -> "ScalarCurve":
        """``x**3 + x``."""
        return cls(lambda x: np.asarray(x, float) ** 3 + np.asarray(x, float),
                   lambda x: 3.0 * np.asarray(x, float) ** 2 + 1.0,
                   lambda x: 6.0 * np.asarray(x, float),
                   name="cubic")

    @classmethod
    def linear(cls, slope: float = 1.0, offset: float = 0.0) -> "ScalarCurve":
        return cls(lambda x: slope * np.asarray(x, float) + offset,
                   lambda x: np.full_like(np.asarray(x, float), slope),
                   lambda x: np.zeros_like(np.asarray(x, float)),
                   name="linear")

    @classmethod
    def staircase_integral(cls, s: CantorStaircase) -> "ScalarCurve":
        """``f = int g`` for a staircase ``g``; no second derivative exists."""
        return cls(s.f, s.g, None, name="staircase-integral")


def tangent_family(c: ScalarCurve, samples: int) -> LineFamily:
    """Tangent lines ``y = f'(t)(x - t) + f(t)`` on a uniform grid of ``t``."""
    if samples < 2:
        raise DomainError("samples must be at least 2")
    t = np.linspace(0.0, 1.0, int(samples))
    ft = np.asarray(c.f(t), dtype=float)
    dft = np.asarray(c.df(t), dtype=float)
    bad = ~(np.isfinite(ft) & np.isfinite(dft))
    if bad.any():
        raise ConstructionError(f"non-finite f or f' at t={t[bad][0]!r}")
    return LineFamily(dft, ft - dft * t, "tangent")


def cantor_sample_points(s: CantorStaircase, count: int) -> np.ndarray:
    """``count`` points of the Cantor set, spread evenly over its intervals.

    The points are left endpoints of the generation ``ceil(log2 count)``
    intervals (capped at the set's depth), so each lies exactly in the set.
    """
    if count < 1:
        raise DomainError("count must be at least 1")
    gen = min(max(0, math.ceil(math.log2(count))), s.depth)
    left = s.set.left_endpoints(gen)
    if left.size > count:
        idx = np.unique(np.round(np.linspace(0, left.size - 1, count)).astype(int))
        left = left[idx]
    return left


def sharp_family(s: CantorStaircase, gap_generations: int, cantor_samples: int) -> LineFamily:
    """The covering family whose union has dimension exactly ``1 + alpha``.

    Over the Cantor set the graph of ``f`` is covered by lines of slope 2
    through ``(x, f(x))`` (tag ``sharp-A``); over each gap, where ``g`` is
    constant, the single tangent line of that gap covers the whole arc
    (tag ``sharp-B``). Gaps are enumerated through ``gap_generations``.
    Zero-length gaps (``alpha = 1``) contribute nothing.
    """
    if gap_generations < 0 or gap_generations > s.depth:
        raise DomainError("gap_generations must lie in [0, depth]")
    x = cantor_sample_points(s, cantor_samples)
    a_slopes = np.full(x.size, 2.0)
    a_inter = s.f(x) - 2.0 * x
    b_x = []
    if s.set.gap_length_ratio > 0:
        for k in range(1, int(gap_generations) + 1):
            b_x.append(s.set.gaps(k)[:, 0])
    if b_x:
        bx = np.concatenate(b_x)
        gb = s.g(bx)
        b_slopes, b_inter = gb, s.f(bx) - gb * bx
    else:
        b_slopes = b_inter = np.empty(0)
    tags = ["sharp-A"] * x.size + ["sharp-B"] * len(b_slopes)
    return LineFamily(np.concatenate([a_slopes, b_slopes]),
                      np.concatenate([a_inter, b_inter]), tags)


@dataclass(frozen=True)
class NormalFamily:
    family: LineFamily
    parameters: np.ndarray
    skipped: tuple = field(default=())


def normal_family(c: ScalarCurve, samples: int) -> NormalFamily:
    """Normal lines ``y = -(x - t)/f'(t) + f(t)``.

    Samples with ``|f'(t)| <= 1e-9`` have vertical normals; they are
    skipped and listed in ``skipped``.
    """
    if samples < 2:
        raise DomainError("samples must be at least 2")
    t = np.linspace(0.0, 1.0, int(samples))
    ft = np.asarray(c.f(t), dtype=float)
    dft = np.asarray(c.df(t), dtype=float)
    if not (np.all(np.isfinite(ft)) and np.all(np.isfinite(dft))):
        raise ConstructionError("non-finite f or f' on the sample grid")
    keep = np.abs(dft) > _SLOPE_EPS
    if not keep.any():
        raise EmptyFamilyError("every sample has a vertical normal")
    slope = -1.0 / dft[keep]
    return NormalFamily(LineFamily(slope, ft[keep] - slope * t[keep], "normal"),
                        t[keep], tuple(float(v) for v in t[~keep]))


def evolute(c: ScalarCurve, t: float) -> tuple:
    """Centre of curvature of the graph of ``f`` at parameter ``t``."""
    d1 = float(c.df(t))
    d2 = float(c.second_derivative(t))
    if not math.isfinite(d2) or abs(d2) <= 1e-12:
        raise CurvatureSingularityError(f"f'' vanishes at t={t!r}")
    q = (1.0 + d1 * d1) / d2
    return (t - d1 * q, float(c.f(t)) + q)


def intersect(l1: Line2, l2: Line2) -> tuple:
    """Intersection point of two non-parallel lines."""
    da = l1.slope - l2.slope
    if da == 0:
        raise DomainError("parallel lines do not intersect")
    x = (l2.intercept - l1.intercept) / da
    return (x, l1.slope * x + l1.intercept)


def point_line_distance(point, line: Line2) -> float:
    x, y = point
    return abs(line.slope * x - y + line.intercept) / math.hypot(line.slope, 1.0)


@dataclass(frozen=True)
class InterceptRange:
    lo: float
    hi: float

    @property
    def is_singleton(self) -> bool:
        return self.hi - self.lo <= 1e-12


def intercept_range(c: ScalarCurve, a: float, samples: int) -> InterceptRange:
    """Extremes of ``f(x) + f'(x)(a - x)`` over ``x`` in ``[0, a]``.

    This is the set of heights at which tangent lines from ``[0, a]`` cross
    the vertical ``x = a``. The true set is the whole interval between
    the extremes, so only the endpoints are returned.
    """
    if samples < 2:
        raise DomainError("samples must be at least 2")
    x = np.linspace(0.0, a, int(samples))
    v = np.asarray(c.f(x), float) + np.asarray(c.df(x), float) * (a - x)
    return InterceptRange(float(v.min()), float(v.max()))


@dataclass(frozen=True)
class SobolevExponent:
    alpha: float
    dimension_bound: float


def sobolev_alpha(s: float, p: float) -> SobolevExponent:
    """Hoelder exponent ``(s - 1) - 1/p`` of ``W^{s,p}`` and the union-dimension bound.

    ``alpha`` is capped at 1 (the largest Hoelder class of ``f'`` that
    matters) and the lower bound on the union dimension is
    ``min(s - 1/p, 2)``.
    """
    if s < 1 or p < 1:
        raise DomainError("need s >= 1 and p >= 1")
    if (s - 1.0) * p <= 1.0:
        raise HypothesisViolationError(f"(s-1)p = {(s - 1.0) * p} must exceed 1")
    return SobolevExponent(min((s - 1.0) - 1.0 / p, 1.0), min(s - 1.0 / p, 2.0))


def write_geometry(fam: LineFamily, path, comment: Optional[str] = None) -> None:
    """Write ``L <slope> <intercept>`` records grouped by provenance."""
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        current = None
        for a, b, tag in zip(fam.slopes, fam.intercepts, fam.provenance):
            if tag != current:
                fh.write(f"# provenance {tag}\n")
                current = tag
            fh.write(f"L {float(a)!r} {float(b)!r}\n")


def read_geometry(path) -> LineFamily:
    slopes, inters, tags = [], [], []
    tag = "custom"
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text[1:].split()
                if len(parts) == 2 and parts[0] == "provenance":
                    if parts[1] not in PROVENANCES:
                        raise ParseError(f"unknown provenance {parts[1]!r}", lineno)
                    tag = parts[1]
                continue
            parts = text.split()
            if parts[0] != "L" or len(parts) != 3:
                raise ParseError(f"expected 'L <slope> <intercept>', got {text!r}", lineno)
            try:
                a, b = float(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"non-numeric line record {text!r}", lineno) from None
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ParseError("non-finite line record", lineno)
            slopes.append(a)
            inters.append(b)
            tags.append(tag)
    if not slopes:
        raise ParseError("geometry file contains no lines")
    return LineFamily(slopes, inters, tags)
