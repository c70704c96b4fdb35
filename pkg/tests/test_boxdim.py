import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linedim.boxdim import (OccupancyGrid, Ray3, Window, box_counts, check_resolution,
                            estimate_dimension, fit_dimension, interior_witness, product_grid,
                            rasterize_intervals, rasterize_lines, rasterize_planes3,
                            rasterize_rays3, read_pgm, sierpinski_grid, write_counts_csv,
                            write_estimate, write_pgm, write_pgm_layers)
from linedim.errors import ConstructionError, DomainError, InsufficientScalesError
from linedim.fractal import CantorSet
from linedim.linefam import LineFamily, ScalarCurve, tangent_family

UNIT2 = Window((0.0, 0.0), (1.0, 1.0))
UNIT3 = Window((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def on_boundary(u, tol=1e-9):
    """Samples touching a cell face belong to no cell's interior."""
    return np.abs(u - np.round(u)) <= tol


def sampled_cells(slopes, intercepts, window, res, n=20001):
    """Cells hit by densely sampled points of each line (a subset of any conservative raster)."""
    x = np.linspace(window.lo[0], window.hi[0], n)
    cells = set()
    for a, b in zip(slopes, intercepts):
        y = a * x + b
        ix = np.floor((x - window.lo[0]) / (window.hi[0] - window.lo[0]) * res).astype(int)
        iy = np.floor((y - window.lo[1]) / (window.hi[1] - window.lo[1]) * res).astype(int)
        ok = (ix >= 0) & (ix < res) & (iy >= 0) & (iy < res)
        ok &= ~on_boundary((x - window.lo[0]) / (window.hi[0] - window.lo[0]) * res)
        ok &= ~on_boundary((y - window.lo[1]) / (window.hi[1] - window.lo[1]) * res)
        cells |= set(zip(ix[ok].tolist(), iy[ok].tolist()))
    return cells


class TestWindowAndResolution:
    def test_bounds(self):
        w = Window.from_bounds([0, 1, -2, 2])
        assert w.lo == (0.0, -2.0) and w.hi == (1.0, 2.0)

    @pytest.mark.parametrize("bad", [[0, 0, 0, 1], [1, 0, 0, 1], [0, 1, 0]])
    def test_bad_window(self, bad):
        with pytest.raises(DomainError):
            Window.from_bounds(bad)

    @pytest.mark.parametrize("res,dim", [(3, 2), (0, 2), (1 << 17, 2), (1 << 11, 3)])
    def test_bad_resolution(self, res, dim):
        with pytest.raises(DomainError):
            check_resolution(res, dim)

    def test_grid_bits_read_only(self):
        g = rasterize_lines(LineFamily([0.0], [0.5]), UNIT2, 8)
        with pytest.raises(ValueError):
            g.bits[0, 0] = True


class TestRasterizeLines:
    def test_horizontal(self):
        g = rasterize_lines(LineFamily([0.0], [0.5]), UNIT2, 16)
        assert g.count() == 16

    def test_diagonal(self):
        g = rasterize_lines(LineFamily([1.0], [0.0]), UNIT2, 16)
        # cells whose interior the diagonal crosses are exactly i == j
        assert 16 <= g.count() <= 31
        assert g.count() == 16
        assert np.all(np.diag(g.bits))

    def test_idempotent(self):
        one = rasterize_lines(LineFamily([0.3], [0.1]), UNIT2, 64)
        two = rasterize_lines(LineFamily([0.3, 0.3], [0.1, 0.1]), UNIT2, 64)
        np.testing.assert_array_equal(one.bits, two.bits)

    def test_outside_window(self):
        g = rasterize_lines(LineFamily([0.0], [5.0]), UNIT2, 8)
        assert g.count() == 0 and g.empty_warning

    @pytest.mark.parametrize("slope,inter", [(3.7, -1.2), (-0.4, 0.9), (0.01, 0.333), (25.0, -12.0)])
    def test_conservative(self, slope, inter):
        g = rasterize_lines(LineFamily([slope], [inter]), UNIT2, 64)
        hit = sampled_cells([slope], [inter], UNIT2, 64)
        marked = set(map(tuple, np.argwhere(g.bits).tolist()))
        assert hit <= marked
        # no more than one cell of slack per column beyond the sampled run
        assert len(marked) <= len(hit) + 2 * 64

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-4, 4), st.floats(-2, 2)), min_size=1, max_size=6),
           st.lists(st.tuples(st.floats(-4, 4), st.floats(-2, 2)), min_size=1, max_size=6))
    def test_union_monotone(self, a, b):
        fa = LineFamily(*zip(*a))
        fab = LineFamily(*zip(*(a + b)))
        ga = rasterize_lines(fa, UNIT2, 32)
        gab = rasterize_lines(fab, UNIT2, 32)
        assert not np.any(ga.bits & ~gab.bits)
        gb = rasterize_lines(LineFamily(*zip(*b)), UNIT2, 32)
        np.testing.assert_array_equal((ga | gb).bits, gab.bits)

    def test_deterministic(self):
        fam = tangent_family(ScalarCurve.parabola(), 300)
        w = Window((0.0, -1.0), (1.0, 1.0))
        a = rasterize_lines(fam, w, 256)
        b = rasterize_lines(fam, w, 256)
        np.testing.assert_array_equal(a.bits, b.bits)


class TestRays3:
    def test_axis_ray(self):
        r = Ray3((0.0, 0.5, 0.5), (1.0, 0.0, 0.0), (0.0, 1.0))
        assert rasterize_rays3([r], UNIT3, 8).count() == 8

    def test_vertical_bundle(self):
        # 16x16 vertical rays from the face z = 1 through [0,1]^2 x [1,2]
        w = Window((0.0, 0.0, 1.0), (1.0, 1.0, 2.0))
        c = (np.arange(16) + 0.5) / 16
        rays = [Ray3((x, y, 1.0), (0.0, 0.0, 1.0), (0.0, 1.0)) for x in c for y in c]
        assert rasterize_rays3(rays, w, 16).count() == 4096

    def test_empty(self):
        with pytest.raises(ConstructionError):
            rasterize_rays3([], UNIT3, 8)

    def test_zero_direction(self):
        with pytest.raises(ConstructionError):
            Ray3((0, 0, 0), (0, 0, 0))

    def test_array_form_matches(self):
        rng = np.random.default_rng(0)
        p0, p1 = rng.random((50, 3)), rng.random((50, 3))
        rays = [Ray3(a, b - a) for a, b in zip(p0, p1)]
        np.testing.assert_array_equal(rasterize_rays3(rays, UNIT3, 32).bits,
                                      rasterize_rays3((p0, p1), UNIT3, 32).bits)

    def test_conservative(self):
        rng = np.random.default_rng(1)
        p0, p1 = rng.uniform(-0.2, 1.2, (40, 3)), rng.uniform(-0.2, 1.2, (40, 3))
        g = rasterize_rays3((p0, p1), UNIT3, 32)
        t = np.linspace(0, 1, 4001)[:, None]
        for a, b in zip(p0, p1):
            pts = a + t * (b - a)
            idx = np.floor(pts * 32).astype(int)
            idx = idx[np.all((idx >= 0) & (idx < 32), axis=1)]
            assert np.all(g.bits[idx[:, 0], idx[:, 1], idx[:, 2]])

    def test_slab_bound(self):
        # at most 4 voxels per unit step along the dominant axis
        g = rasterize_rays3(([(0.0, 0.1, 0.2)], [(1.0, 0.7, 0.9)]), UNIT3, 64)
        assert 64 <= g.count() <= 4 * 64


class TestPlanes3:
    def test_flat_plane(self):
        g = rasterize_planes3(np.array([[0.5, 0.0, 0.0]]), UNIT3, 16)
        assert g.count() == 256

    def test_conservative(self):
        c = np.array([[0.2, 0.5, -0.3]])
        g = rasterize_planes3(c, UNIT3, 32)
        u = np.linspace(0, 1, 801)
        x, y = np.meshgrid(u, u, indexing="ij")
        z = 0.2 + 0.5 * x - 0.3 * y
        ix, iy = np.minimum((x * 32).astype(int), 31), np.minimum((y * 32).astype(int), 31)
        iz = np.floor(z * 32).astype(int)
        ok = (iz >= 0) & (iz < 32) & ~on_boundary(z * 32)
        assert np.all(g.bits[ix[ok], iy[ok], iz[ok]])


class TestBoxCounts:
    def test_full(self):
        g = OccupancyGrid(UNIT2, np.ones((16, 16), bool))
        assert [n for _, n in box_counts(g)] == [256, 64, 16, 4]

    def test_single_cell(self):
        bits = np.zeros((16, 16), bool)
        bits[5, 9] = True
        assert [n for _, n in box_counts(OccupancyGrid(UNIT2, bits))] == [1, 1, 1, 1]

    def test_row(self):
        bits = np.zeros((16, 16), bool)
        bits[:, 3] = True
        assert [n for _, n in box_counts(OccupancyGrid(UNIT2, bits))] == [16, 8, 4, 2]

    def test_deltas(self):
        g = OccupancyGrid(UNIT2, np.ones((16, 16), bool))
        assert [d for d, _ in box_counts(g)] == [1 / 16, 1 / 8, 1 / 4, 1 / 2]

    def test_nonincreasing(self):
        g = rasterize_lines(tangent_family(ScalarCurve.cubic(), 200), Window((0, 0), (1, 2)), 512)
        n = [c for _, c in box_counts(g)]
        assert all(a >= b for a, b in zip(n, n[1:]))
        assert all(a <= 4 * b for a, b in zip(n, n[1:]))


class TestFitDimension:
    def test_full_square(self):
        est = estimate_dimension(OccupancyGrid(UNIT2, np.ones((256, 256), bool)))
        assert est.slope == pytest.approx(2.0, abs=0.01)

    def test_row(self):
        bits = np.zeros((256, 256), bool)
        bits[:, 100] = True
        assert estimate_dimension(OccupancyGrid(UNIT2, bits)).slope == pytest.approx(1.0, abs=0.01)

    def test_cantor(self):
        c = CantorSet(1 / 3, 14)
        g = rasterize_intervals(c.intervals(14), Window((0.0,), (1.0,)), 1 << 16)
        est = fit_dimension(box_counts(g), ambient_dim=1)
        assert est.slope == pytest.approx(math.log(2) / math.log(3), abs=0.05)

    def test_cantor_product(self):
        c = CantorSet(1 / 3, 12)
        g = product_grid(rasterize_intervals(c.intervals(12), Window((0.0,), (1.0,)), 1024))
        est = estimate_dimension(g)
        assert est.slope == pytest.approx(1 + math.log(2) / math.log(3), abs=0.07)

    def test_sierpinski(self):
        est = estimate_dimension(sierpinski_grid(1024))
        assert est.slope == pytest.approx(math.log(3) / math.log(2), abs=0.02)

    def test_segment(self):
        g = rasterize_lines(LineFamily([0.7], [0.1]), UNIT2, 1024)
        assert estimate_dimension(g).slope == pytest.approx(1.0, abs=0.05)

    def test_too_few_scales(self):
        with pytest.raises(InsufficientScalesError):
            fit_dimension([(0.5, 4), (0.25, 16), (0.125, 64)])

    def test_all_saturated(self):
        bits = np.zeros((16, 16), bool)
        bits[0, 0] = True
        with pytest.raises(InsufficientScalesError):
            estimate_dimension(OccupancyGrid(UNIT2, bits))

    def test_slope_clamped(self):
        est = fit_dimension([(1 / 16, 4096), (1 / 8, 512), (1 / 4, 64), (1 / 2, 8)], min_count=1)
        assert est.slope == 2.0 and est.clamped

    def test_report_format(self):
        est = estimate_dimension(OccupancyGrid(UNIT2, np.ones((64, 64), bool)))
        assert est.report().startswith("slope=2.000000 r2=1.000000 scales=")


class TestInteriorWitness:
    def test_parabola_tangents(self):
        w = Window((0.0, -1.0), (1.0, 1.0))
        g = rasterize_lines(tangent_family(ScalarCurve.parabola(), 512), w, 256)
        wit = interior_witness(g, 16)
        assert wit is not None and wit.size >= 16
        # oracle: a point (x, y) lies on a tangent y = 2t x - t^2 with t in [0, 1]
        # iff t = x +- sqrt(x^2 - y) lands in [0, 1]
        u = np.linspace(0.05, 0.95, 19)
        xs = wit.lo[0] + u * (wit.hi[0] - wit.lo[0])
        ys = wit.lo[1] + u * (wit.hi[1] - wit.lo[1])
        for x in xs:
            for y in ys:
                disc = x * x - y
                assert disc >= 0
                roots = (x - math.sqrt(disc), x + math.sqrt(disc))
                assert any(0 <= t <= 1 for t in roots)

    def test_single_line(self):
        g = rasterize_lines(LineFamily([0.3], [0.2]), UNIT2, 64)
        assert interior_witness(g, 2) is None

    def test_full(self):
        wit = interior_witness(OccupancyGrid(UNIT2, np.ones((32, 32), bool)), 4)
        assert wit.size == 32 and wit.lo == (0.0, 0.0) and wit.hi == (1.0, 1.0)

    def test_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            bits = rng.random((16, 16)) < 0.85
            wit = interior_witness(OccupancyGrid(UNIT2, bits), 2)
            best = max((k for k in range(1, 17) for i in range(17 - k) for j in range(17 - k)
                        if bits[i:i + k, j:j + k].all()), default=0)
            assert (wit.size if wit else 0) == (best if best >= 2 else 0)


class TestExports:
    def test_pgm_roundtrip(self, tmp_path):
        bits = np.zeros((8, 8), bool)
        bits[1, 6] = True
        write_pgm(OccupancyGrid(UNIT2, bits), tmp_path / "g.pgm")
        img = read_pgm(tmp_path / "g.pgm")
        assert img.shape == (8, 8)
        assert img[8 - 1 - 6, 1] == 255 and img.sum() == 255

    def test_layers(self, tmp_path):
        g = rasterize_rays3([Ray3((0.5, 0.5, 0.0), (0, 0, 1))], UNIT3, 4)
        paths = write_pgm_layers(g, tmp_path / "layers")
        assert [p.rsplit("/", 1)[1] for p in paths] == [f"grid_z{k:04d}.pgm" for k in range(4)]

    def test_counts_csv(self, tmp_path):
        g = OccupancyGrid(UNIT2, np.ones((4, 4), bool))
        write_counts_csv(box_counts(g), tmp_path / "c.csv")
        assert (tmp_path / "c.csv").read_text() == "delta,count\n0.25,16\n0.5,4\n"

    def test_estimate(self, tmp_path):
        est = estimate_dimension(OccupancyGrid(UNIT2, np.ones((64, 64), bool)))
        write_estimate(est, tmp_path / "e.txt")
        assert (tmp_path / "e.txt").read_text().startswith("slope=2.000000")
