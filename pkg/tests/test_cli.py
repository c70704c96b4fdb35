import json
import math

import numpy as np
import pytest

from linedim.cli import main, read_config
from linedim.errors import ParseError
from linedim.kakeya3d import BoundaryField, unit_cube_faces, write_faces


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def cube_faces(tmp_path, v, n=4):
    path = tmp_path / "faces.txt"
    write_faces(BoundaryField.from_function(unit_cube_faces(), v, n), path)
    return str(path)


class TestStaircase:
    def test_csv(self, tmp_path):
        code, out = run(tmp_path, "s", "staircase", "--alpha", "log2/log3", "--samples", "5")
        assert code == 0
        rows = (out / "staircase.csv").read_text().splitlines()
        assert rows[0] == "x,g,f" and len(rows) == 6
        x, g, f = map(float, rows[3].split(","))
        assert (x, g) == (0.5, 0.5)

    def test_manifest(self, tmp_path):
        code, out = run(tmp_path, "s", "staircase", "--samples", "3", "--seed", "7")
        man = json.loads((out / "manifest.json").read_text())
        assert man["command"] == "staircase" and man["seed"] == 7
        assert {"numpy", "scipy", "linedim"} <= set(man["versions"])
        assert man["parameters"]["alpha"] == pytest.approx(math.log(2) / math.log(3))


class TestExitCodes:
    def test_bad_window(self, tmp_path):
        code, _ = run(tmp_path, "a", "sharp-example", "--window", "0,1,2")
        assert code == 2

    def test_bad_resolution(self, tmp_path):
        code, _ = run(tmp_path, "a", "sharp-example", "--res", "100")
        assert code == 2

    def test_bad_alpha(self, tmp_path):
        code, _ = run(tmp_path, "a", "staircase", "--alpha", "1.5")
        assert code == 2

    def test_unknown_flag(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["staircase", "--bogus"])
        assert exc.value.code == 2

    def test_malformed_sensors(self, tmp_path):
        bad = tmp_path / "s.txt"
        bad.write_text("P 1 1\nP oops\n")
        code, _ = run(tmp_path, "c", "characteristics", "--sensors", str(bad))
        assert code == 3

    def test_missing_geometry_file(self, tmp_path):
        code, _ = run(tmp_path, "b", "boxdim", "--geometry", str(tmp_path / "none.txt"))
        assert code == 3

    def test_config_parse_error(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("alpha = 0.5\nnot a pair\n")
        code, _ = run(tmp_path, "a", "staircase", "--config", str(cfg))
        assert code == 3

    def test_numerical_failure(self, tmp_path):
        # a single horizontal line leaves too few unsaturated scales to fit
        geo = tmp_path / "g.txt"
        geo.write_text("L 0 0.5\n")
        code, _ = run(tmp_path, "b", "boxdim", "--geometry", str(geo), "--res", "8")
        assert code == 4


class TestConfig:
    def test_parse(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# comment\ngap-gens = 4\nalpha=0.5  # trailing\n")
        assert read_config(cfg) == {"gap_gens": "4", "alpha": "0.5"}

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour=red\n")
        with pytest.raises(ParseError):
            read_config(cfg)

    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("samples=9\ndepth=12\n")
        code, out = run(tmp_path, "s", "staircase", "--config", str(cfg), "--samples", "4")
        params = json.loads((out / "manifest.json").read_text())["parameters"]
        assert code == 0
        assert params["samples"] == 4      # flag beats config
        assert params["depth"] == 12       # config beats default
        assert params["gap_gens"] == 10    # default


class TestSharpExample:
    def test_alpha_one_small(self, tmp_path):
        code, out = run(tmp_path, "a", "sharp-example", "--alpha", "1", "--res", "256")
        assert code == 0
        for name in ("geometry.txt", "grid.pgm", "family.svg", "counts.csv", "estimate.txt",
                     "report.txt", "manifest.json"):
            assert (out / name).exists()
        assert (out / "estimate.txt").read_text().startswith("slope=")

    def test_reproducible(self, tmp_path):
        args = ["sharp-example", "--alpha", "0.5", "--res", "512", "--seed", "3"]
        run(tmp_path, "a", *args)
        run(tmp_path, "b", *args)
        for name in ("counts.csv", "report.txt", "geometry.txt", "grid.pgm"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestTangentDisk:
    @pytest.mark.parametrize("fn", ["parabola", "cubic"])
    def test_found(self, tmp_path, fn):
        code, out = run(tmp_path, fn, "tangent-disk", "--function", fn)
        text = (out / "witness.txt").read_text()
        assert code == 0
        assert "raster_witness=found" in text and "certified_witness=found" in text

    def test_linear(self, tmp_path):
        code, out = run(tmp_path, "lin", "tangent-disk", "--function", "linear")
        text = (out / "witness.txt").read_text()
        assert code == 0
        assert "raster_witness=none" in text and "certified_witness=none" in text

    def test_staircase_skips_certificate(self, tmp_path):
        code, out = run(tmp_path, "st", "tangent-disk", "--function", "staircase-integral")
        assert code == 0
        assert "certified_witness=skipped" in (out / "witness.txt").read_text()


class TestCharacteristics:
    def test_focus(self, tmp_path):
        sensors = tmp_path / "s.txt"
        sensors.write_text("P 1 1\n")
        code, out = run(tmp_path, "c", "characteristics", "--speed", "affine:-1,1",
                        "--sensors", str(sensors))
        report = (out / "report.txt").read_text()
        assert code == 0
        assert "focal=1.0" in report and "coverage=1.0" in report

    def test_staircase(self, tmp_path):
        sensors = tmp_path / "s.txt"
        sensors.write_text("P 1 1\n")
        code, out = run(tmp_path, "c", "characteristics", "--speed", "staircase:log2/log3",
                        "--sensors", str(sensors))
        report = (out / "report.txt").read_text().splitlines()
        assert code == 0 and "focal=none" in report
        cov = float(next(l for l in report if l.startswith("coverage="))[9:])
        assert cov < 1.0

    def test_parallel_verticals(self, tmp_path):
        # g = 0.25: lines x = 0.25 t + s; the sensor (0.5, 1) lies only on s = 0.25
        sensors = tmp_path / "s.txt"
        sensors.write_text("P 0.5 1\n")
        code, out = run(tmp_path, "c", "characteristics", "--speed", "affine:0,0.25",
                        "--sensors", str(sensors), "--samples", "5")
        lines = (out / "coverage.txt").read_text().splitlines()
        assert lines == ["s=0.0 covered=0", "s=0.25 covered=1", "s=0.5 covered=0",
                         "s=0.75 covered=0", "s=1.0 covered=0"]

    def test_bad_speed(self, tmp_path):
        code, _ = run(tmp_path, "c", "characteristics", "--speed", "quadratic:1")
        assert code == 2

    def test_with_raster(self, tmp_path):
        code, out = run(tmp_path, "c", "characteristics", "--res", "256")
        assert code == 0 and (out / "counts.csv").exists()


class TestFlux3d:
    def test_top_face(self, tmp_path):
        faces = cube_faces(tmp_path, lambda p, i: np.array([0, 0, 1.0]) if i == 5 else np.zeros(3))
        code, out = run(tmp_path, "f", "flux3d", "--faces", faces, "--res", "32",
                        "--window", "0,1,0,1,1,2")
        report = (out / "report.txt").read_text()
        assert code == 0 and "status=ok" in report and report.startswith("flux=1.0")

    def test_hypothesis_not_met(self, tmp_path):
        faces = cube_faces(tmp_path, lambda p, i: np.array([1.0, 0, 0]) if i >= 2 else np.zeros(3))
        code, out = run(tmp_path, "f", "flux3d", "--faces", faces)
        assert code == 0
        assert "status=hypothesis not met" in (out / "report.txt").read_text()

    def test_needs_faces(self, tmp_path):
        code, _ = run(tmp_path, "f", "flux3d")
        assert code == 2


def test_boxdim_roundtrip(tmp_path):
    code, out = run(tmp_path, "a", "sharp-example", "--alpha", "0.5", "--res", "512")
    code2, out2 = run(tmp_path, "b", "boxdim", "--geometry", str(out / "geometry.txt"),
                      "--window", "0,1,-2,2", "--res", "512")
    assert code == code2 == 0
    assert (out / "counts.csv").read_bytes() == (out2 / "counts.csv").read_bytes()
