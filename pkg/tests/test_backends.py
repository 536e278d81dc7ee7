import csv
import os
import subprocess
import sys

import numpy as np

from lossyqsim._accel import DISABLE_ENV, HAVE_NUMBA, backend_name

SCRIPT = """
import sys
from lossyqsim._accel import backend_name
from lossyqsim.cli import main
print(backend_name())
sys.exit(main(sys.argv[1:]))
"""


def run(out, disable):
    env = dict(os.environ)
    env.pop(DISABLE_ENV, None)
    if disable:
        env[DISABLE_ENV] = "1"
    args = ["simulate", "--qubits", "5", "--reps", "4", "--precision", "float16,bfloat16,float3", "--out", str(out)]
    res = subprocess.run([sys.executable, "-c", SCRIPT, *args], env=env, capture_output=True, text=True, check=True)
    with open(out / "simulate.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return res.stdout.splitlines()[0], rows


def test_env_flag_selects_backend_and_results_agree(tmp_path):
    name_np, rows_np = run(tmp_path / "np", True)
    assert name_np == "numpy"
    name_nb, rows_nb = run(tmp_path / "nb", False)
    assert name_nb == ("numba" if HAVE_NUMBA else "numpy")
    assert [(r["precision"], r["step"]) for r in rows_np] == [(r["precision"], r["step"]) for r in rows_nb]
    # only the accumulation order of the matrix-vector products differs
    a = np.array([float(r["fidelity"]) for r in rows_np])
    b = np.array([float(r["fidelity"]) for r in rows_nb])
    assert np.abs(a - b).max() < 1e-12


def test_backend_name():
    assert backend_name() in ("numba", "numpy")
