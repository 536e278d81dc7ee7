import csv
import json

import numpy as np
import pytest

from lossyqsim import harness
from lossyqsim.cli import main
from lossyqsim.vq import read_codebook, read_packed_state, unpack_state

SMALL_VQ = ["--qubits", "3", "--reps", "30", "--codebook-bits", "2,3,4,6", "--seeds", "0,1", "--precision", "float16,float8"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def small_vq(tmp_path_factory):
    out = tmp_path_factory.mktemp("vq")
    assert main(["vq", *SMALL_VQ, "--out", str(out)]) == 0
    return out


def test_simulate_schema_and_values(tmp_path):
    assert main(["simulate", "--qubits", "3", "--reps", "2", "--precision", "float64,float4", "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "simulate.csv")
    assert tuple(r[0]) == harness.SIMULATE_COLUMNS == ("config_digest", "precision", "step", "fidelity", "raw_overlap")
    body = r[1:]
    assert len(body) == 2 * 13
    assert len({row[0] for row in body}) == 1
    f64 = [float(row[3]) for row in body if row[1] == "float64"]
    assert max(abs(f - 1) for f in f64) < 1e-12
    manifest = json.loads((tmp_path / "simulate.run.json").read_text())
    assert manifest["config_digest"] == body[0][0]
    assert "wall_time_s" in manifest


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--qubits", "4", "--reps", "3", "--precision", "bfloat16,float2"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/simulate.csv").read_bytes() == (tmp_path / "b/simulate.csv").read_bytes()


def test_floats_have_17_digits(tmp_path):
    main(["simulate", "--qubits", "2", "--reps", "1", "--precision", "float3", "--out", str(tmp_path)])
    for row in rows(tmp_path / "simulate.csv")[1:]:
        assert float(row[3]) == float(format(float(row[3]), ".17g"))
        assert row[3] == format(float(row[3]), ".17g")


def test_dump_amplitudes_counts(tmp_path):
    assert main(["dump-amplitudes", "--out", str(tmp_path)]) == 0
    amp = rows(tmp_path / "amplitudes.csv")
    assert tuple(amp[0]) == harness.AMPLITUDE_COLUMNS
    assert len(amp) - 1 == 64 * 652 == 41_728
    hist = rows(tmp_path / "magnitude_hist.csv")
    assert tuple(hist[0]) == harness.HISTOGRAM_COLUMNS
    assert len(hist) - 1 == 64
    # recount from the emitted rows
    mags = np.array([abs(complex(float(r[3]), float(r[4]))) for r in amp[1:]])
    counts = np.array([int(r[4]) for r in hist[1:]])
    assert counts.sum() == mags.size
    edges = [float(hist[1][2])] + [float(r[3]) for r in hist[1:]]
    assert np.array_equal(np.histogram(mags, bins=edges)[0], counts)


def test_dump_amplitudes_empty_circuit(tmp_path):
    assert main(["dump-amplitudes", "--qubits", "3", "--reps", "0", "--bins", "5", "--out", str(tmp_path)]) == 0
    amp = rows(tmp_path / "amplitudes.csv")[1:]
    assert {r[1] for r in amp} == {"0"}
    assert len(amp) == 8
    assert len(rows(tmp_path / "magnitude_hist.csv")) == 6


def test_vq_outputs(small_vq):
    r = rows(small_vq / "vq.csv")
    assert tuple(r[0]) == harness.VQ_COLUMNS
    assert len(r) - 1 == 4 * 2 * 2 * 181
    for m in (2, 3, 4, 6):
        for s in (0, 1):
            cb = read_codebook(small_vq / "codebooks" / f"codebook_m{m}_seed{s}.qvqc")
            assert cb.m == m and cb.seed == s and len(cb) <= 1 << m
            p = read_packed_state(small_vq / "states" / f"final_m{m}_seed{s}_float16.qvqs")
            assert len(unpack_state(p, cb)) == 8


def test_vq_independent_of_workers(small_vq, tmp_path):
    assert main(["vq", *SMALL_VQ, "--workers", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "vq.csv").read_bytes() == (small_vq / "vq.csv").read_bytes()
    for f in (small_vq / "codebooks").iterdir():
        assert (tmp_path / "codebooks" / f.name).read_bytes() == f.read_bytes()


def test_fit_and_estimate(small_vq, tmp_path, capsys):
    assert main(["fit", str(small_vq / "vq.csv"), "--slice-stride", "10", "--out", str(tmp_path)]) == 0
    fits = rows(tmp_path / "fits.csv")
    assert tuple(fits[0]) == harness.FIT_COLUMNS
    assert [int(r[0]) for r in fits[1:]] == list(range(10, 181, 10))
    trend = json.loads((tmp_path / "trend.json").read_text())
    assert set(trend) == {"A", "k", "off", "a", "b", "provenance"}


@pytest.fixture
def trend_file(tmp_path):
    path = tmp_path / "trend.json"
    path.write_text(harness.TrendModel(A=1.0, k=0.5, off=-0.02, a=1.0, b=0.5).to_json())
    return path


def test_estimate_report(trend_file, capsys):
    tm = harness.read_trend(trend_file)
    f = tm.off + 0.5 * tm.A
    assert main(["estimate", str(trend_file), "-f", repr(f), "-d", "100", "--qubits", "3"]) == 0
    out = capsys.readouterr().out
    m = float(out.split("model m")[1].split()[0])
    assert m == pytest.approx(tm.x0(100), abs=1e-6)
    bits = int(np.ceil(m))
    assert f"ceil(m)           {bits}\n" in out
    assert f"ceil(m)+1         {bits + 1}" in out
    assert f"state size        {bits * 8} bits" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--precision", "float11"],
        ["simulate", "--qubits", "0"],
        ["simulate", "--init", "gauss"],
        ["simulate", "--init", "basis:64"],
        ["vq", "--codebook-bits", "25"],
        ["vq", "--qubits", "2", "--reps", "0", "--codebook-bits", "3"],
        ["fit", "/nonexistent/vq.csv"],
        ["estimate", "/nonexistent/trend.json", "-f", "0.9", "-d", "10"],
    ],
)
def test_config_errors_exit_2(argv, tmp_path, capsys):
    if argv[0] in ("simulate", "vq"):
        argv = argv + ["--out", str(tmp_path)]
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("lossyqsim: error:")


@pytest.mark.parametrize("argv", [[], ["simulate", "--bogus"], ["vq", "--seeds", "a,b"]])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_estimate_out_of_range(trend_file, capsys):
    assert main(["estimate", str(trend_file), "-f", "1.5", "-d", "100"]) == 2
    assert "(0, 1]" in capsys.readouterr().err
    assert main(["estimate", str(trend_file), "-f", "0.99", "-d", "100"]) == 2
    assert "reachable range" in capsys.readouterr().err


def test_malformed_csv(tmp_path):
    bad = tmp_path / "vq.csv"
    bad.write_text("m,step\n1,2\n")
    assert main(["fit", str(bad), "--out", str(tmp_path)]) == 2

