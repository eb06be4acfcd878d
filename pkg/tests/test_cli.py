import json
import math

import numpy as np
import pytest

from weylheat import verify
from weylheat.cli import csv_to_rows, main, rows_to_csv
from weylheat.config import BUNDLED, load_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_toml(tmp_path, body, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


FREE = """
g = [[1.0, 0.0], [0.0, 1.0]]
R = [[0.0, 0.0], [0.0, 0.0]]
t = [0.5]
eval_points = [[[0.0, 0.0], [0.3, -0.4]], [[1.0, 1.0], [1.0, 1.0]]]
"""


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    cfg = load_config(name)
    assert cfg.g_plus.shape == (cfg.n, cfg.n)
    assert load_config(name.removesuffix(".toml")).name == cfg.name


def test_default_config_is_product():
    cfg = load_config()
    assert cfg.t == (0.7,) and cfg.s == (0.4,)
    assert np.allclose(cfg.R_plus, [[0, 1], [-1, 0]]) and np.allclose(cfg.R_minus, [[0, -0.5], [0.5, 0]])


def test_canon_free_has_no_blocks(tmp_path, capsys):
    code, out, _ = run(capsys, "canon", "--config", write_toml(tmp_path, FREE))
    assert code == 0
    data = json.loads(out)
    assert data["plus"]["blocks"] == [] and data["plus"]["rank"] == 0


def test_canon_landau(capsys):
    code, out, _ = run(capsys, "canon", "--config", "landau2d")
    data = json.loads(out)
    assert code == 0
    (block,) = data["plus"]["blocks"]
    assert abs(block["B"] - 1.5) <= 1e-12 and block["mult"] == 1


def test_canon_malformed_names_entry(tmp_path, capsys):
    bad = FREE.replace("R = [[0.0, 0.0], [0.0, 0.0]]", "R = [[0.0, 1.0], [0.5, 0.0]]")
    code, _, err = run(capsys, "canon", "--config", write_toml(tmp_path, bad))
    assert code == 2
    assert "R_plus" in err and "(0,1)" in err


@pytest.mark.parametrize("body, fragment", [
    ("g = [[1.0]]\nR = [[0.0]]\nbogus = 1\n", "unknown config keys"),
    ("g = [[1.0]]\nR = [[0.0]]\nt = [-1.0]\n", "positive"),
    ("g = [[-1.0]]\nR = [[0.0]]\n", "g_plus"),
    ("g = [[1.0]]\nR = [[0.0]]\nprecision = 'quad'\n", "precision"),
    ("g = [[1.0]]\nR = [[0.0]\n", "cannot parse"),
])
def test_config_errors_exit_2(tmp_path, capsys, body, fragment):
    code, _, err = run(capsys, "canon", "--config", write_toml(tmp_path, body))
    assert code == 2 and fragment in err


def test_missing_config(capsys):
    code, _, err = run(capsys, "canon", "--config", "/nonexistent/x.toml")
    assert code == 2 and "not found" in err


def test_json_config(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"g": [[2.0]], "R": [[0.0]], "t": 0.25}))
    code, out, _ = run(capsys, "kernel", "--config", str(p))
    assert code == 0
    (row,) = json.loads(out)["values"]
    # diagonal of the 1-d free kernel: sqrt(g / (4 pi t))
    assert abs(row["value"][0] - math.sqrt(2.0 / (4 * math.pi * 0.25))) <= 1e-14


def test_kernel_free_values(tmp_path, capsys):
    code, out, _ = run(capsys, "kernel", "--config", write_toml(tmp_path, FREE))
    assert code == 0
    rows = json.loads(out)["values"]
    t = 0.5
    for r in rows:
        d2 = sum((a - b) ** 2 for a, b in zip(r["x"], r["y"]))
        expect = math.exp(-d2 / (4 * t)) / (4 * math.pi * t)
        assert abs(r["value"][0] - expect) <= 1e-14 * max(1.0, expect) and r["value"][1] == 0.0


def test_kernel_landau_diagonal_constant(capsys):
    code, out, _ = run(capsys, "kernel", "--config", "landau2d")
    assert code == 0
    rows = json.loads(out)["values"]
    for r in rows:
        if r["x"] == r["y"]:
            t = r["t"][0]
            expect = 1.5 / math.sinh(1.5 * t) / (4 * math.pi)
            assert abs(r["value"][0] - expect) <= 1e-13 * expect and abs(r["value"][1]) <= 1e-15


def test_kernel_csv_json_bit_identical(tmp_path, capsys):
    jpath, cpath = tmp_path / "k.json", tmp_path / "k.csv"
    assert main(["kernel", "--config", "landau2d", "--out", str(jpath)]) == 0
    assert main(["kernel", "--config", "landau2d", "--format", "csv", "--out", str(cpath)]) == 0
    rows_json = json.loads(jpath.read_text())["values"]
    rows_csv = csv_to_rows(cpath.read_text())
    assert rows_json == rows_csv
    assert rows_to_csv(rows_csv) == cpath.read_text()


def test_csv_only_for_kernel(capsys):
    code, _, err = run(capsys, "product", "--format", "csv")
    assert code == 2 and "CSV" in err


def test_product_magnetic_trace_finite(capsys):
    code, out, _ = run(capsys, "product")
    assert code == 0
    (entry,) = json.loads(out)["entries"]
    assert entry["trace"]["finite"] is True
    assert entry["t"] == 0.7 and entry["s"] == 0.4
    assert len(entry["values"]) == 5


def test_product_free_trace_divergent(tmp_path, capsys):
    code, out, _ = run(capsys, "product", "--config", write_toml(tmp_path, FREE))
    (entry,) = json.loads(out)["entries"]
    div = entry["trace"]
    assert code == 0 and div["finite"] is False
    assert div["divergence"]["rank"] == 0 and div["divergence"]["dimension"] == 2


def test_verify_suite_filter(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "ch")
    report = json.loads(out)
    assert code == 0 and report["schema"] == 1
    assert report["records"] and all(r["name"].startswith("ch.") for r in report["records"])
    for r in report["records"]:
        assert set(r) >= {"name", "paper_ref", "computed", "oracle", "abs_err", "rel_err", "tolerance", "pass"}
        assert r["paper_ref"]


def test_verify_writes_out_file(tmp_path, capsys):
    p = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "--suite", "gauss", "--out", str(p))
    assert code == 0 and json.loads(p.read_text()) == json.loads(out)


def test_verify_tampered_tolerance(tmp_path, capsys):
    body = load_config_text("landau2d.toml") + "\n[tolerances]\n\"ch.product\" = 1e-20\n\"gauss\" = 1e-20\n"
    code, out, err = run(capsys, "verify", "--config", write_toml(tmp_path, body), "--suite", "all")
    report = json.loads(out)
    assert code == 1
    assert "ch.product" in report["summary"]["failing"]
    assert "FAILED: ch.product" in err
    assert any(n.startswith("gauss.") for n in report["summary"]["failing"])


def load_config_text(name):
    from weylheat.config import bundled_path
    return bundled_path(name).read_text()


def test_verify_deterministic(capsys):
    a = json.loads(run(capsys, "verify", "--suite", "ch", "--seed", "3")[1])
    b = json.loads(run(capsys, "verify", "--suite", "ch", "--seed", "3")[1])
    assert json.dumps(verify.strip_timestamp(a), sort_keys=True) == json.dumps(verify.strip_timestamp(b), sort_keys=True)


def test_verify_bad_points_per_axis(capsys):
    code, _, err = run(capsys, "verify", "--points-per-axis", "3")
    assert code == 2


def test_precision_env(monkeypatch, capsys):
    monkeypatch.setenv("WEYLHEAT_PRECISION", "fuzzy")
    code, _, err = run(capsys, "verify", "--suite", "weyl")
    assert code == 2 and "WEYLHEAT_PRECISION" in err
    monkeypatch.setenv("WEYLHEAT_PRECISION", "double")
    code, out, _ = run(capsys, "verify", "--suite", "weyl")
    assert code == 0 and json.loads(out)["environment"]["precision"] == "double"


def test_domain_violation_exit_3(tmp_path, capsys):
    # |tB| >= 1 leaves the closed-form small-field expansion domain
    body = load_config_text("landau2d.toml") + "\nsmall_field_t = 2.0\n"
    code, _, err = run(capsys, "verify", "--config", write_toml(tmp_path, body), "--suite", "kernels")
    assert code == 3 and "method failure" in err
