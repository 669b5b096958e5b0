import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tvdd.cli import ExperimentConfig, bundled_reference, main, prepare
from tvdd.imaging import load_image, save_image, synthetic_image


def read_trace(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_denoise_l1_matches_bundled_reference(tmp_path, capsys):
    trace, report = tmp_path / "t.csv", tmp_path / "r.json"
    status = main(["denoise-l1", "--partition", "2x2", "--alpha", "1",
                   "--trace", str(trace), "--report", str(report), "--output", str(tmp_path / "o.pgm")])
    assert status == 0
    rep = json.loads(report.read_text())
    ref = bundled_reference(ExperimentConfig("denoise-l1"))
    assert abs(rep["final_energy"] - ref) <= 1e-4 * abs(ref)
    assert {"task", "seed", "partition", "outer_iters", "max_inner_iters", "final_energy",
            "psnr", "wall_time_sec"} <= rep.keys()
    rows = read_trace(trace)
    assert rows[0] == ["iter", "energy", "rel_gap", "psnr"]
    assert len(rows) - 1 == rep["outer_iters"] + 1
    assert load_image(tmp_path / "o.pgm").shape == (64, 64)
    assert json.loads(capsys.readouterr().out)["task"] == "denoise-l1"


def test_same_config_same_artifacts(tmp_path):
    outs = []
    for k in range(2):
        args = ["inpaint-l2", "--partition", "2x3", "--seed", "11", "--max-outer", "20",
                "--trace", str(tmp_path / f"t{k}.csv"), "--output", str(tmp_path / f"o{k}.pgm")]
        main(args)
        outs.append(((tmp_path / f"t{k}.csv").read_bytes(), (tmp_path / f"o{k}.pgm").read_bytes()))
    assert outs[0] == outs[1]


def test_invalid_mask_path(tmp_path, capsys):
    assert main(["inpaint-l1", "--mask", str(tmp_path / "missing.pgm")]) == 1
    assert "missing.pgm" in capsys.readouterr().err


def test_inpainting_user_image_needs_mask(tmp_path, capsys):
    save_image(synthetic_image(16), tmp_path / "in.pgm")
    assert main(["inpaint-l2", "--input", str(tmp_path / "in.pgm")]) == 1
    assert "--mask" in capsys.readouterr().err


def test_mask_shape_mismatch(tmp_path, capsys):
    save_image(np.zeros((8, 8)), tmp_path / "m.pgm")
    assert main(["inpaint-l2", "--mask", str(tmp_path / "m.pgm")]) == 1


def test_budget_exhaustion_exit_code(tmp_path):
    assert main(["denoise-l2", "--max-outer", "2", "--trace", str(tmp_path / "t.csv")]) == 2
    assert len(read_trace(tmp_path / "t.csv")) == 1 + 3


def test_bad_arguments(capsys):
    assert main(["denoise-l2", "--partition", "2by2"]) == 1
    assert main(["denoise-l2", "--threads", "0"]) == 1
    assert main(["denoise-l2", "--seed", "-1"]) == 1
    with pytest.raises(SystemExit):
        main(["sharpen"])


def test_user_image_without_noise_flags_is_not_corrupted(tmp_path):
    img = synthetic_image(16)
    save_image(img, tmp_path / "in.pgm")
    config = ExperimentConfig("denoise-l2", input=str(tmp_path / "in.pgm"))
    model, clean = prepare(config)
    np.testing.assert_array_equal(model.f, load_image(tmp_path / "in.pgm"))
    assert clean is None and bundled_reference(config) is None


def test_reference_only_for_default_recipe():
    assert bundled_reference(ExperimentConfig("segment")) is not None
    assert bundled_reference(ExperimentConfig("segment", c1=0.7)) is None
    assert bundled_reference(ExperimentConfig("denoise-l2", seed=1)) is None
    assert bundled_reference(ExperimentConfig("denoise-l2", alpha=5.0)) is None


def test_user_image_with_noise(tmp_path):
    save_image(synthetic_image(24), tmp_path / "in.pgm")
    args = ["denoise-l2", "--input", str(tmp_path / "in.pgm"), "--gaussian-var", "0.01",
            "--alpha", "20", "--report", str(tmp_path / "r.json"), "--partition", "1x2"]
    assert main(args) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["psnr"] > 25 and rep["reference_energy"] is None


def test_segment_writes_binary_image(tmp_path):
    assert main(["segment", "--partition", "2x2", "--output", str(tmp_path / "s.pgm")]) == 0
    assert set(np.unique(load_image(tmp_path / "s.pgm"))) <= {0.0, 1.0}


def test_baseline_solver(tmp_path):
    assert main(["denoise-l2", "--solver", "baseline", "--baseline-iters", "3000",
                 "--report", str(tmp_path / "r.json")]) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["partition"] == "1x1" and rep["outer_iters"] == 3000


def test_python_backend_flag(tmp_path):
    assert main(["denoise-l1", "--backend", "python", "--report", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["backend"] == "python"


def test_log_file(tmp_path):
    main(["denoise-l2", "--max-outer", "1", "--log", str(tmp_path / "run.log")])
    assert "budget" in (tmp_path / "run.log").read_text()


def test_verify(capsys):
    assert main(["verify", "--scale", "0.2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tvdd", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "denoise-l2" in out.stdout


def test_bench_table():
    from tvdd import bench

    rows = bench.run(sizes=(8,), iters=5, repeat=1)
    assert {r[2] for r in rows} <= {"python", "cython"}
    assert "speedup" in bench.format_table(rows)
