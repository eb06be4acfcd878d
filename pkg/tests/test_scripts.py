import subprocess
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.mark.parametrize("name, args", [
    ("small_time_asymptotics.py", ["--steps", "3"]),
    ("product_quadrature_convergence.py", ["--resolutions", "16", "20"]),
    ("trace_scan.py", ["--steps", "2"]),
    ("ch_convergence.py", ["--dim", "2"]),
])
def test_script_runs(name, args, tmp_path):
    out = tmp_path / "out.csv"
    subprocess.run([sys.executable, str(SCRIPTS / name), *args, "--out", str(out)], check=True)
    lines = out.read_text().splitlines()
    assert len(lines) >= 2 and "," in lines[0]
