import csv
import io
import json

import numpy as np
import pytest

from heisenwiener import cli, config, heatkernel as hk, validation


def run(argv, capsys):
    code = cli.run_cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# heisenwiener ")
    assert lines[1].startswith("# config ")
    json.loads(lines[1][len("# config "):])
    return list(csv.reader(io.StringIO("\n".join(lines[2:]))))


def jsonl(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


# -- config parsing ----------------------------------------------------------------

def test_parse_types_and_comments():
    vals = config.parse_text("cylinder", """
        # a comment
        times = 0.4, 1
        n_paths = 2000   # trailing comment
        box_1 = -1:1, -inf:inf, 0:2
        method = quadrature
    """)
    assert vals["times"] == [0.4, 1.0]
    assert vals["n_paths"] == 2000
    assert vals["box_1"] == [[-1.0, 1.0], [-np.inf, np.inf], [0.0, 2.0]]
    assert vals["method"] == "quadrature"


@pytest.mark.parametrize("text", ["bogus = 1", "n_paths = 1.5", "times = 0.4, x", "box_1 = 1",
                                  "n_paths", "seed = 1\nseed = 2"])
def test_parse_errors(text):
    with pytest.raises(config.ConfigError):
        config.parse_text("cylinder", text)


def test_load_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("t = 0.5\nn_paths = 100\n")
    cfg = config.load("fk", str(path), {"n_paths": 7, "seed": None})
    assert cfg["t"] == 0.5 and cfg["n_paths"] == 7 and cfg["seed"] == config.DEFAULT_SEED
    with pytest.raises(config.ConfigError):
        config.load("fk", str(tmp_path / "missing.cfg"))
    with pytest.raises(config.ConfigError):
        config.load("nothing")


def test_cylinder_boxes():
    cfg = config.load("cylinder", None, {"times": [0.5, 1.0], "box_2": [[0, 1], [0, 1], [0, 1]]})
    boxes = config.cylinder_boxes(cfg)
    assert boxes.shape == (2, 3, 2)
    assert np.all(np.isinf(boxes[0])) and np.all(boxes[1] == [0, 1])
    with pytest.raises(config.ConfigError):
        config.cylinder_boxes(config.load("cylinder", None, {"times": [1.0], "box_2": [[0, 1]] * 3}))
    with pytest.raises(config.ConfigError):
        config.cylinder_boxes(config.load("cylinder"))


def test_dumps_is_canonical_json():
    cfg = config.load("cylinder", None, {"times": [1.0], "box_1": [[-np.inf, 0.0]] * 3})
    d = json.loads(cfg.dumps())
    assert d["command"] == "cylinder" and d["box_1"][0] == ["-inf", 0.0]


# -- CLI -------------------------------------------------------------------------

def test_kernel_golden_columns(capsys):
    code, out, _ = run(["kernel", "--t", "1", "--z", "0,1", "--u", "0"], capsys)
    assert code == 0
    rows = csv_rows(out)
    assert rows[0] == cli.KERNEL_COLUMNS
    assert float(rows[1][3]) == pytest.approx(0.015625, rel=1e-12)
    assert float(rows[2][3]) == pytest.approx(0.009844231993507693, rel=1e-10)
    assert len(rows) == 3


def test_kernel_adaptive_and_config_file(tmp_path, capsys):
    cfgfile = tmp_path / "k.cfg"
    cfgfile.write_text("t = 0.5\nz = 0.5\nu = 0.7\nmethod = adaptive\n")
    out = tmp_path / "k.csv"
    assert run(["kernel", "--config", str(cfgfile), "--out", str(out)], capsys)[0] == 0
    rows = csv_rows(out.read_text())
    direct = hk.kernel_eval(hk.KernelConfig(), 0.5, np.array([0.5, 0.0, 0.7]))
    assert float(rows[1][3]) == pytest.approx(direct, rel=1e-9)


def test_sample_output(tmp_path, capsys):
    summary = tmp_path / "m.jsonl"
    code, out, _ = run(["sample", "--n-paths", "3", "--intervals", "2", "--summary", str(summary)],
                       capsys)
    assert code == 0
    rows = csv_rows(out)
    assert rows[0] == ["path_id", "time", "x_1", "y_1", "u"]
    assert len(rows) == 1 + 3 * 3
    recs = jsonl(summary.read_text())
    assert recs[0]["record"] == "provenance" and recs[1]["record"] == "moments"


def test_cylinder_output(capsys):
    code, out, _ = run(["cylinder", "--config", "/dev/null", "--n-paths", "2000"], capsys)
    assert code == 2  # no times configured
    cfg_args = ["cylinder", "--n-paths", "2000", "--substeps", "8"]
    config_text = "times = 1\nbox_1 = -inf:inf, -inf:inf, 0:inf\n"
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as fh:
        fh.write(config_text)
    code, out, _ = run(cfg_args + ["--config", fh.name], capsys)
    assert code == 0
    recs = jsonl(out)
    assert recs[0]["record"] == "provenance"
    assert [r["method"] for r in recs[1:]] == ["quadrature", "mc"]
    assert recs[1]["value"] == pytest.approx(0.5, abs=1e-3)
    assert set(recs[2]) == {"record", "method", "value", "error", "n_paths", "seed"}


def test_fk_output_and_density(tmp_path, capsys):
    dens = tmp_path / "d.csv"
    cfgfile = tmp_path / "fk.cfg"
    cfgfile.write_text("V = quadratic_radial\nV_alpha = 0.5\nf = gaussian_bump\n"
                       "f_center = 0.3, -0.2, 0.4\nf_width = 0.7\n"
                       "density_r_edges = 0, 1, 2\ndensity_u_edges = -2, 0, 2\n")
    code, out, _ = run(["fk", "--config", str(cfgfile), "--n-paths", "1000", "--substeps", "8",
                        "--density-out", str(dens)], capsys)
    assert code == 0
    recs = jsonl(out)
    assert recs[1]["record"] == "estimate"
    assert set(recs[1]) == {"record", "value", "stderr", "n_paths", "seed"}
    rows = csv_rows(dens.read_text())
    assert rows[0] == cli.DENSITY_COLUMNS and len(rows) == 5


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["kernel", "--t", "abc"],
    ["kernel", "--method", "simpson"],
    ["sample", "--scheme", "euler"],
    ["fk", "--config", "/nonexistent/file.cfg"],
    ["fk", "--t", "-1", "--n-paths", "10"],
    ["validate", "--suite", "everything"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["record"] == "error" and rec["exit_code"] == 2


def test_fk_density_needs_edges(tmp_path, capsys):
    code, _, _ = run(["fk", "--n-paths", "10", "--substeps", "2", "--density-out",
                      str(tmp_path / "d.csv")], capsys)
    assert code == 2


def test_numerical_failure_exit_3(monkeypatch, capsys):
    def broken(*a, **k):
        raise hk.KernelConvergenceError("tail too large")
    monkeypatch.setattr(hk, "kernel_eval", broken)
    code, out, err = run(["kernel"], capsys)
    assert code == 3 and out == ""
    assert json.loads(err)["kind"] == "numerical"


def test_validate_exit_codes(monkeypatch, capsys):
    # the deterministic kernel criteria pass at any scale
    monkeypatch.setitem(validation.SUITES, "quick", (1, 2, 3))
    code, out, err = run(["validate", "--suite", "quick", "--scale", "0.01"], capsys)
    assert code == 0
    assert "[PASS] criterion  2" in err
    recs = jsonl(out)
    assert [r["criterion"] for r in recs if r["record"] == "criterion"] == [1, 2, 3]
    monkeypatch.setitem(validation.CRITERIA, 2, ("forced", lambda ctx: (False, {}, "never")))
    code, _, err = run(["validate", "--suite", "quick", "--scale", "0.01"], capsys)
    assert code == 4 and "[FAIL] criterion  2" in err


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "heisenwiener", "kernel", "--u", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert float(csv_rows(res.stdout)[1][3]) == pytest.approx(1 / 64, rel=1e-12)
