"""Occupancy grids for unions of lines, rays and planes, and box counting.

Rasterization is conservative: a cell is marked whenever the geometry
passes through its closed box, except that a line grazing only a corner
of a cell does not mark it. Grids are stored as boolean arrays indexed
``[ix, iy]`` (2-D) or ``[ix, iy, iz]`` (3-D), axis 0 running along ``x``.

Box counting aggregates ``2 x 2 (x 2)`` blocks by logical OR down to a
``2``-cell-per-axis grid. Box dimension upper-bounds Hausdorff dimension
and agrees with it on every self-similar set built in this package, so it
serves as the computable estimate throughout.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ConstructionError, DomainError, InsufficientScalesError

MAX_LOG2_RES = {1: 24, 2: 16, 3: 10}
_SNAP = 1e-9
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[lo, hi]`` in 1, 2 or 3 dimensions."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or len(lo) not in (1, 2, 3):
            raise DomainError("window corners must share dimension 1, 2 or 3")
        if not all(math.isfinite(v) for v in lo + hi):
            raise DomainError("window bounds must be finite")
        if not all(h > l for l, h in zip(lo, hi)):
            raise DomainError(f"window needs hi > lo componentwise, got {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_bounds(cls, bounds: Sequence[float]) -> "Window":
        """From ``x0, x1, y0, y1[, z0, z1]``."""
        b = [float(v) for v in bounds]
        if len(b) not in (2, 4, 6):
            raise DomainError("expected 2, 4 or 6 window bounds")
        return cls(tuple(b[0::2]), tuple(b[1::2]))

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)


def check_resolution(res: int, dimension: int) -> int:
    res = int(res)
    if res < 2 or res & (res - 1):
        raise DomainError(f"resolution must be a power of two, got {res}")
    if res.bit_length() - 1 > MAX_LOG2_RES[dimension]:
        raise DomainError(f"resolution {res} too large for a {dimension}-D grid")
    return res


class OccupancyGrid:
    """Binary occupancy over a :class:`Window` with ``res`` cells per axis.

    ``bits`` is read-only once the grid is built. ``empty_warning`` is set
    when no input geometry met the window.
    """

    def __init__(self, window: Window, bits: np.ndarray, empty_warning: bool = False):
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != window.dimension or len(set(bits.shape)) != 1:
            raise ConstructionError("bits must be a cube array matching the window")
        check_resolution(bits.shape[0], bits.ndim)
        bits = bits.copy() if bits.flags.writeable else bits
        bits.setflags(write=False)
        self.window = window
        self.bits = bits
        self.empty_warning = bool(empty_warning)

    @property
    def resolution(self) -> int:
        return self.bits.shape[0]

    @property
    def dimension(self) -> int:
        return self.bits.ndim

    @property
    def cell_size(self) -> np.ndarray:
        return self.window.extent / self.resolution

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __or__(self, other: "OccupancyGrid") -> "OccupancyGrid":
        if other.window != self.window or other.bits.shape != self.bits.shape:
            raise DomainError("grids must share window and resolution")
        return OccupancyGrid(self.window, self.bits | other.bits,
                             self.empty_warning and other.empty_warning)

    def coarsen(self) -> "OccupancyGrid":
        return OccupancyGrid(self.window, _or_reduce(self.bits), self.empty_warning)

    def __repr__(self):
        return (f"OccupancyGrid({self.dimension}-D, res={self.resolution}, "
                f"occupied={self.count()})")


def _or_reduce(bits: np.ndarray) -> np.ndarray:
    h = bits.shape[0] // 2
    shape = []
    for _ in range(bits.ndim):
        shape += [h, 2]
    return bits.reshape(shape).any(axis=tuple(range(1, 2 * bits.ndim, 2)))


def _snap(u: np.ndarray) -> np.ndarray:
    r = np.round(u)
    return np.where(np.abs(u - r) < _SNAP, r, u)


def _cell_span(lo: np.ndarray, hi: np.ndarray, res: int):
    """First and last cell touched by coordinate range ``[lo, hi]`` (cell units)."""
    first = np.floor(lo)
    last = np.maximum(first, np.ceil(hi) - 1)
    return (np.clip(first, 0, res - 1).astype(np.int64),
            np.clip(last, 0, res - 1).astype(np.int64))


def _expand_runs(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate ``arange(s, s + n)`` for every ``(s, n)``."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    return np.repeat(starts, lengths) + offsets


def rasterize_intervals(intervals, window: Window, res: int) -> OccupancyGrid:
    """1-D grid marking every cell met by a closed interval ``[a, b]``."""
    if window.dimension != 1:
        raise DomainError("interval rasterization needs a 1-D window")
    res = check_resolution(res, 1)
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if iv.size == 0:
        raise ConstructionError("no intervals given")
    lo = _snap((iv[:, 0] - window.lo[0]) / (window.extent[0] / res))
    hi = _snap((iv[:, 1] - window.lo[0]) / (window.extent[0] / res))
    inside = (hi >= 0) & (lo <= res)
    first, last = _cell_span(lo[inside], hi[inside], res)
    bits = np.zeros(res, dtype=bool)
    bits[_expand_runs(first, last - first + 1)] = True
    return OccupancyGrid(window, bits, empty_warning=not inside.any())


def rasterize_lines(fam, window: Window, res: int) -> OccupancyGrid:
    """Mark every cell of a 2-D window crossed by a line of ``fam``.

    Each line is walked column by column along ``x``; within a column the
    line's ``y`` extent is covered completely, so no crossed cell is missed
    whatever the slope.
    """
    if window.dimension != 2:
        raise DomainError("line rasterization needs a 2-D window")
    res = check_resolution(res, 2)
    slopes = np.asarray(fam.slopes, dtype=float)
    inters = np.asarray(fam.intercepts, dtype=float)
    if slopes.size == 0:
        raise ConstructionError("line family is empty")
    dx, dy = window.extent / res
    xs = window.lo[0] + dx * np.arange(res + 1)
    col = np.arange(res, dtype=np.int64)
    bits = np.zeros(res * res, dtype=bool)
    hit_any = False
    chunk = max(1, _CHUNK_CELLS // res)
    for start in range(0, slopes.size, chunk):
        a = slopes[start:start + chunk, None]
        b = inters[start:start + chunk, None]
        u = _snap((a * xs[None, :] + b - window.lo[1]) / dy)
        lo = np.minimum(u[:, :-1], u[:, 1:])
        hi = np.maximum(u[:, :-1], u[:, 1:])
        inside = (hi >= 0) & (lo <= res)
        if not inside.any():
            continue
        hit_any = True
        cols = np.broadcast_to(col, lo.shape)[inside]
        first, last = _cell_span(lo[inside], hi[inside], res)
        bits[_expand_runs(cols * res + first, last - first + 1)] = True
    return OccupancyGrid(window, bits.reshape(res, res), empty_warning=not hit_any)


@dataclass(frozen=True)
class Ray3:
    """Segment ``origin + t * direction`` for ``t`` in ``t_range``."""

    origin: tuple
    direction: tuple
    t_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        o = tuple(float(v) for v in self.origin)
        d = tuple(float(v) for v in self.direction)
        t = tuple(float(v) for v in self.t_range)
        if len(o) != 3 or len(d) != 3 or len(t) != 2:
            raise ConstructionError("rays need a 3-D origin, 3-D direction and a t-range")
        if not all(math.isfinite(v) for v in o + d + t):
            raise ConstructionError("ray components must be finite")
        if d == (0.0, 0.0, 0.0):
            raise ConstructionError("ray direction must be nonzero")
        if t[1] < t[0]:
            raise ConstructionError("ray t-range must be increasing")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "t_range", t)

    def point(self, t):
        return np.add(self.origin, np.multiply.outer(np.asarray(t, float), self.direction))


def _as_segment_arrays(rays):
    if isinstance(rays, tuple) and len(rays) == 2:
        p0, p1 = (np.asarray(v, dtype=float).reshape(-1, 3) for v in rays)
        return p0, p1
    rays = list(rays)
    if not rays:
        raise ConstructionError("ray list is empty")
    rays = [r if isinstance(r, Ray3) else Ray3(*r) for r in rays]
    o = np.array([r.origin for r in rays])
    d = np.array([r.direction for r in rays])
    t = np.array([r.t_range for r in rays])
    return o + t[:, :1] * d, o + t[:, 1:] * d


def _clip_segments(p0, p1, res):
    """Liang-Barsky clip to ``[0, res]^3``; returns clipped ends and keep mask."""
    d = p1 - p0
    t0 = np.zeros(len(p0))
    t1 = np.ones(len(p0))
    keep = np.ones(len(p0), dtype=bool)
    for k in range(3):
        dk = d[:, k]
        flat = dk == 0
        keep &= ~(flat & ((p0[:, k] < 0) | (p0[:, k] > res)))
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (0.0 - p0[:, k]) / dk
            tb = (res - p0[:, k]) / dk
        lo = np.where(flat, -np.inf, np.minimum(ta, tb))
        hi = np.where(flat, np.inf, np.maximum(ta, tb))
        t0 = np.maximum(t0, lo)
        t1 = np.minimum(t1, hi)
    keep &= t0 <= t1
    return p0 + t0[:, None] * d, p0 + t1[:, None] * d, keep


def rasterize_rays3(rays, window: Window, res: int) -> OccupancyGrid:
    """Conservative voxel marking of ray segments clipped to a 3-D window.

    ``rays`` is a sequence of :class:`Ray3` (or ``(origin, direction,
    t_range)`` triples), or a pair ``(start_points, end_points)`` of
    ``(n, 3)`` arrays. Each segment is cut into unit slabs along its
    dominant axis; inside a slab the other two coordinates move by at most
    one cell, so at most four voxels per slab are marked.
    """
    if window.dimension != 3:
        raise DomainError("ray rasterization needs a 3-D window")
    res = check_resolution(res, 3)
    p0, p1 = _as_segment_arrays(rays)
    if len(p0) == 0:
        raise ConstructionError("ray list is empty")
    lo = np.asarray(window.lo)
    cell = window.extent / res
    bits = np.zeros(res ** 3, dtype=bool)
    hit_any = False
    chunk = max(1, _CHUNK_CELLS // (4 * res))
    for start in range(0, len(p0), chunk):
        a = (p0[start:start + chunk] - lo) / cell
        b = (p1[start:start + chunk] - lo) / cell
        a, b, keep = _clip_segments(a, b, res)
        if not keep.any():
            continue
        hit_any = True
        _mark_segments(bits, _snap(a[keep]), _snap(b[keep]), res)
    return OccupancyGrid(window, bits.reshape(res, res, res), empty_warning=not hit_any)


def _mark_segments(bits, a, b, res):
    d = b - a
    axis = np.argmax(np.abs(d), axis=1)
    rows = np.arange(len(a))
    ak, bk = a[rows, axis], b[rows, axis]
    first, last = _cell_span(np.minimum(ak, bk), np.maximum(ak, bk), res)
    nslab = last - first + 1
    seg = np.repeat(rows, nslab)
    slab = _expand_runs(first, nslab)
    dk = d[seg, axis[seg]]
    moving = dk != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = np.where(moving, (slab - a[seg, axis[seg]]) / dk, 0.0)
        tb = np.where(moving, (slab + 1 - a[seg, axis[seg]]) / dk, 1.0)
    t_lo = np.clip(np.minimum(ta, tb), 0.0, 1.0)
    t_hi = np.clip(np.maximum(ta, tb), 0.0, 1.0)
    q0 = _snap(a[seg] + t_lo[:, None] * d[seg])
    q1 = _snap(a[seg] + t_hi[:, None] * d[seg])
    cmin, cmax = _cell_span(np.minimum(q0, q1), np.maximum(q0, q1), res)
    cmin[np.arange(len(seg)), axis[seg]] = slab
    cmax[np.arange(len(seg)), axis[seg]] = slab
    for di in (0, 1):
        for dj in (0, 1):
            for dl in (0, 1):
                idx = np.minimum(cmin + (di, dj, dl), cmax)
                bits[(idx[:, 0] * res + idx[:, 1]) * res + idx[:, 2]] = True


def rasterize_planes3(coeffs, window: Window, res: int) -> OccupancyGrid:
    """Voxels met by graph planes ``z = c0 + c1 x + c2 y`` over a 3-D window.

    For every ``(ix, iy)`` column the plane's ``z`` range over the column's
    footprint is covered, which marks exactly the voxels whose closed box
    meets the plane (corner-grazing excepted).
    """
    if window.dimension != 3:
        raise DomainError("plane rasterization needs a 3-D window")
    res = check_resolution(res, 3)
    c = np.asarray(coeffs, dtype=float).reshape(-1, 3)
    if len(c) == 0:
        raise ConstructionError("plane list is empty")
    if not np.all(np.isfinite(c)):
        raise ConstructionError("plane coefficients must be finite")
    dx, dy, dz = window.extent / res
    xs = window.lo[0] + dx * np.arange(res + 1)
    ys = window.lo[1] + dy * np.arange(res + 1)
    ix, iy = np.meshgrid(np.arange(res, dtype=np.int64), np.arange(res, dtype=np.int64),
                         indexing="ij")
    column = (ix * res + iy) * res
    bits = np.zeros(res ** 3, dtype=bool)
    hit_any = False
    for c0, c1, c2 in c:
        zx = c1 * xs
        zy = c2 * ys
        # extreme corners of each footprint
        zlo = np.minimum(zx[:-1], zx[1:])[:, None] + np.minimum(zy[:-1], zy[1:])[None, :] + c0
        zhi = np.maximum(zx[:-1], zx[1:])[:, None] + np.maximum(zy[:-1], zy[1:])[None, :] + c0
        ulo = _snap((zlo - window.lo[2]) / dz)
        uhi = _snap((zhi - window.lo[2]) / dz)
        inside = (uhi >= 0) & (ulo <= res)
        if not inside.any():
            continue
        hit_any = True
        first, last = _cell_span(ulo[inside], uhi[inside], res)
        bits[_expand_runs(column[inside] + first, last - first + 1)] = True
    return OccupancyGrid(window, bits.reshape(res, res, res), empty_warning=not hit_any)


def box_counts(grid: OccupancyGrid) -> list:
    """``(delta, N)`` pairs from the finest cells up to 2 boxes per axis.

    ``delta`` is the box side as a fraction of the window side.
    """
    bits = grid.bits
    out = []
    while True:
        out.append((1.0 / bits.shape[0], int(np.count_nonzero(bits))))
        if bits.shape[0] <= 2:
            break
        bits = _or_reduce(bits)
    return out


@dataclass(frozen=True)
class DimensionEstimate:
    scales: tuple
    counts: tuple
    slope: float
    fit_r2: float
    scale_range_used: tuple
    clamped: bool = False
    intercept: float = 0.0

    def report(self) -> str:
        used = self.scale_range_used
        return f"slope={self.slope:.6f} r2={self.fit_r2:.6f} scales={used[0]}..{used[-1]}"


def fit_dimension(counts, ambient_dim: int = 2, drop_finest: bool = True,
                  min_count: int = 8) -> DimensionEstimate:
    """Least-squares slope of ``log N`` against ``log(1/delta)``.

    The finest scale (biased by conservative rasterization) and any scale
    with fewer than ``min_count`` boxes (saturated) are discarded before
    fitting. ``scale_range_used`` indexes the scales sorted finest-first.
    """
    pts = sorted((float(d), int(n)) for d, n in counts)
    if len(pts) < 4:
        raise InsufficientScalesError(f"need at least 4 scales, got {len(pts)}")
    deltas = np.array([p[0] for p in pts])
    ns = np.array([p[1] for p in pts])
    keep = ns >= min_count
    if drop_finest:
        keep[0] = False
    used = np.flatnonzero(keep)
    if used.size < 3:
        raise InsufficientScalesError(
            f"only {used.size} scales remain after trimming (need 3)")
    x = np.log(1.0 / deltas[used])
    y = np.log(ns[used])
    if np.ptp(y) == 0:
        slope, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        fit = stats.linregress(x, y)
        slope, intercept, r2 = float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
    clamped = not (0.0 <= slope <= ambient_dim)
    slope = min(max(slope, 0.0), float(ambient_dim))
    return DimensionEstimate(tuple(deltas), tuple(int(n) for n in ns), slope,
                             min(max(r2, 0.0), 1.0), tuple(int(i) for i in used),
                             clamped, intercept)


def estimate_dimension(grid: OccupancyGrid, **kwargs) -> DimensionEstimate:
    return fit_dimension(box_counts(grid), ambient_dim=grid.dimension, **kwargs)


@dataclass(frozen=True)
class Witness:
    """Fully occupied square block of cells and its world-coordinate box."""

    start: tuple
    size: int
    lo: tuple
    hi: tuple


def _largest_full_square(bits: np.ndarray) -> tuple:
    sat = np.zeros((bits.shape[0] + 1, bits.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = bits.astype(np.int64).cumsum(0).cumsum(1)

    def find(k):
        block = sat[k:, k:] - sat[:-k, k:] - sat[k:, :-k] + sat[:-k, :-k]
        hits = np.argwhere(block == k * k)
        return tuple(hits[0]) if len(hits) else None

    lo, hi, where = 0, min(bits.shape), None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        pos = find(mid)
        if pos is None:
            hi = mid - 1
        else:
            lo, where = mid, pos
    return lo, where


def interior_witness(grid: OccupancyGrid, min_cells: int) -> Optional[Witness]:
    """Largest fully occupied square block, if it spans at least ``min_cells``.

    A full block of cells shows the union covers an open box up to the
    grid's resolution.
    """
    if min_cells < 2:
        raise DomainError("min_cells must be at least 2")
    if grid.dimension != 2:
        raise DomainError("interior witness search is 2-D only")
    size, where = _largest_full_square(grid.bits)
    if size < min_cells:
        return None
    cell = grid.cell_size
    lo = np.asarray(grid.window.lo) + np.asarray(where) * cell
    return Witness(tuple(int(v) for v in where), int(size),
                   tuple(float(v) for v in lo), tuple(float(v) for v in lo + size * cell))


# auxiliary sets with known dimension

def sierpinski_grid(res: int) -> OccupancyGrid:
    """Sierpinski triangle: cell ``(i, j)`` occupied iff ``i & j == 0``."""
    res = check_resolution(res, 2)
    i, j = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
    return OccupancyGrid(Window((0.0, 0.0), (1.0, 1.0)), (i & j) == 0)


def product_grid(column: OccupancyGrid) -> OccupancyGrid:
    """``S x [0, 1]`` for a 1-D set ``S``."""
    if column.dimension != 1:
        raise DomainError("product_grid takes a 1-D grid")
    w = column.window
    bits = np.repeat(column.bits[:, None], column.resolution, axis=1)
    return OccupancyGrid(Window((w.lo[0], 0.0), (w.hi[0], 1.0)), bits)


# exports

def write_pgm(grid: OccupancyGrid, path) -> None:
    """Binary PGM (P5), ``y`` increasing upwards, occupied cells 255."""
    if grid.dimension != 2:
        raise DomainError("write_pgm takes a 2-D grid")
    img = np.where(grid.bits.T[::-1], 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_pgm_layers(grid: OccupancyGrid, directory) -> list:
    """One ``grid_z####.pgm`` per z-layer of a 3-D grid."""
    if grid.dimension != 3:
        raise DomainError("write_pgm_layers takes a 3-D grid")
    os.makedirs(directory, exist_ok=True)
    paths = []
    w = grid.window
    for k in range(grid.resolution):
        layer = OccupancyGrid(Window(w.lo[:2], w.hi[:2]), grid.bits[:, :, k])
        path = os.path.join(directory, f"grid_z{k:04d}.pgm")
        write_pgm(layer, path)
        paths.append(path)
    return paths


def write_counts_csv(counts, path) -> None:
    with open(path, "w") as fh:
        fh.write("delta,count\n")
        for d, n in counts:
            fh.write(f"{float(d)!r},{int(n)}\n")


def write_estimate(est: DimensionEstimate, path) -> None:
    with open(path, "w") as fh:
        fh.write(est.report() + "\n")
