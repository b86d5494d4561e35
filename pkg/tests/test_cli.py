import json
import math

import numpy as np
import pytest

from nilmetric.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_classify_yes_exit_zero(capsys):
    rc, out, _ = run(capsys, "classify", "--catalog", "heisenberg", "--derivation", "standard")
    assert rc == 0
    obj = json.loads(out)
    assert obj["answer"] == "yes" and obj["Q"] == 4.0


def test_classify_no_exit_one(capsys):
    rc, out, _ = run(capsys, "classify", "--catalog", "r2", "--derivation", "shear-weight1")
    assert rc == 1
    assert json.loads(out)["answer"] == "no"


def test_classify_rototranslation_no(capsys):
    rc, out, _ = run(
        capsys, "classify", "--catalog", "rototranslation", "--derivation", "diag110"
    )
    assert rc == 1


def test_classify_automorphism_entry(capsys):
    rc, out, _ = run(capsys, "classify", "--catalog", "r2", "--automorphism", "half-shear")
    assert rc == 1
    rc, out, _ = run(capsys, "classify", "--catalog", "r2", "--automorphism", "conformal")
    assert rc == 0


def test_usage_errors(capsys):
    rc, _, err = run(capsys, "classify")
    assert rc == 2
    rc, _, err = run(capsys, "classify", "--catalog", "nope", "--derivation", "x")
    assert rc == 2


def test_malformed_json_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dimension": 2,, }')
    rc, _, err = run(capsys, "classify", "--input", str(bad))
    assert rc == 2
    assert "line" in err and "column" in err


def test_classify_from_file(tmp_path, capsys):
    obj = {
        "name": "heis",
        "dimension": 3,
        "brackets": [{"i": 1, "j": 2, "terms": [{"k": 3, "coeff": "1"}]}],
        "derivation": [[1, 0, 0], [0, 1, 0], [0, 0, 2]],
    }
    f = tmp_path / "h.json"
    f.write_text(json.dumps(obj))
    rc, out, _ = run(capsys, "classify", "--input", str(f))
    assert rc == 0
    assert json.loads(out)["Q"] == 4.0


def test_build_and_eval_roundtrip(tmp_path, capsys):
    ball_path = tmp_path / "ball.json"
    rc, out, _ = run(
        capsys, "build", "--catalog", "heisenberg", "--derivation", "standard",
        "--out", str(ball_path),
    )
    assert rc == 0
    saved = json.loads(ball_path.read_text())
    assert saved["distance"]["ball"]["type"] == "layered"

    pairs = [
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        [[0.5, -0.25, 1.0], [0.5, -0.25, 1.0]],
        [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
    ]
    pf = tmp_path / "pairs.json"
    pf.write_text(json.dumps(pairs))
    rc, out, _ = run(
        capsys, "eval", "--catalog", "heisenberg", "--derivation", "standard",
        "--pairs", str(pf),
    )
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0] == "index,distance"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert vals[0] > 0
    assert vals[1] == 0.0
    # homogeneity: d(0, delta_2 x) = 2 d(0, x) for x on the first layer
    assert vals[2] == pytest.approx(2 * vals[0], rel=1e-6)


def test_eval_deterministic(tmp_path, capsys):
    pairs = [[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]]
    pf = tmp_path / "pairs.json"
    pf.write_text(json.dumps(pairs))
    outs = []
    for _ in range(2):
        rc, out, _ = run(
            capsys, "eval", "--catalog", "heisenberg", "--derivation", "standard",
            "--pairs", str(pf), "--seed", "7",
        )
        assert rc == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_build_rejected_exit_one(capsys):
    rc, _, err = run(capsys, "build", "--catalog", "r2", "--derivation", "shear-weight1")
    assert rc == 1
    assert "no homogeneous distance" in err


def test_verify_box_certificate(capsys):
    rc, out, _ = run(
        capsys, "verify", "--catalog", "r2-box", "--derivation", "spiral",
        "--samples", "20000",
    )
    assert rc == 0
    rep = json.loads(out)
    assert rep["box_certificate"]["ok"]
    assert rep["convexity"]["violations"] == 0
    assert rep["axioms"]["ok"]


def test_verify_euclidean(capsys):
    rc, out, _ = run(
        capsys, "verify", "--catalog", "r2", "--derivation", "double",
        "--samples", "5000",
    )
    assert rc == 0


def test_decompose_command(capsys):
    rc, out, _ = run(capsys, "decompose", "--catalog", "r2", "--automorphism", "conformal")
    assert rc == 0
    obj = json.loads(out)
    assert np.allclose(obj["A"], np.eye(2), atol=1e-10)
    assert max(obj["residuals"].values()) < 1e-9


def test_decompose_needs_lambda(tmp_path, capsys):
    obj = {
        "name": "r2",
        "dimension": 2,
        "brackets": [],
        "automorphism": [[2, 0], [0, 4]],
    }
    f = tmp_path / "a.json"
    f.write_text(json.dumps(obj))
    rc, _, err = run(capsys, "decompose", "--input", str(f))
    assert rc == 2 and "lambda" in err
    rc, out, _ = run(capsys, "decompose", "--input", str(f), "--lambda", "2.0")
    assert rc == 0


def test_render_circle(tmp_path, capsys):
    csv_path = tmp_path / "s.csv"
    svg_path = tmp_path / "s.svg"
    rc, _, _ = run(
        capsys, "render", "--catalog", "r2", "--derivation", "double",
        "--resolution", "64", "--out", str(csv_path), "--svg", str(svg_path),
    )
    assert rc == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "angle,x,y,gauge_residual"
    assert len(lines) == 65
    for line in lines[1:]:
        a, x, y, r = (float(v) for v in line.split(","))
        assert math.hypot(x, y) == pytest.approx(1.0, abs=1e-9)
        assert r < 1e-9
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_render_box_square(capsys):
    rc, out, _ = run(
        capsys, "render", "--catalog", "r2-box", "--derivation", "spiral",
        "--resolution", "8",
    )
    assert rc == 0
    lines = out.strip().splitlines()[1:]
    pts = np.array([[float(v) for v in line.split(",")[1:3]] for line in lines])
    assert np.allclose(np.abs(pts[1]), [1.0, 1.0], atol=1e-9)  # square corner


def test_render_rejects_high_dimension(capsys):
    rc, _, err = run(capsys, "render", "--catalog", "engel", "--derivation", "weights-1123")
    assert rc == 2


def test_render_deterministic(capsys):
    args = ("render", "--catalog", "r2", "--derivation", "double", "--resolution", "32")
    rc1, out1, _ = run(capsys, *args)
    rc2, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_catalog_listing_and_check(capsys):
    rc, out, _ = run(capsys, "catalog")
    assert rc == 0
    listing = json.loads(out)
    assert "heisenberg" in listing and "engel" in listing
    rc, out, _ = run(capsys, "catalog", "--check")
    assert rc == 0
    assert json.loads(out)["failures"] == []


def test_eval_reuses_built_ball(tmp_path, capsys):
    ball_path = tmp_path / "ball.json"
    rc, _, _ = run(
        capsys, "build", "--catalog", "heisenberg", "--derivation", "standard",
        "--out", str(ball_path),
    )
    assert rc == 0
    pairs = [[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]]
    pf = tmp_path / "pairs.json"
    pf.write_text(json.dumps(pairs))
    rc, out1, _ = run(
        capsys, "eval", "--catalog", "heisenberg", "--derivation", "standard",
        "--pairs", str(pf), "--ball-file", str(ball_path),
    )
    assert rc == 0
    rc, out2, _ = run(
        capsys, "eval", "--catalog", "heisenberg", "--derivation", "standard",
        "--pairs", str(pf),
    )
    assert out1 == out2
