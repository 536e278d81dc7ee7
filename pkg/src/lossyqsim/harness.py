"""Experiment sweeps behind the command-line interface.

Everything here is deterministic given the config: identical configs give
byte-identical CSV files regardless of the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .analysis import (
    TrendModel,
    fidelity,
    fit_logistic,
    fit_trend,
    raw_overlap,
    reference_trace,
)
from .circuits import build_benchmark, initial_state, parse_init
from .core import collect_states
from .numerics import parse_format
from .vq import collect_pool, pack_state, run_vq_circuit, train_codebook, write_codebook, write_packed_state

SCALAR_PRECISIONS = ("float64", "float32", "float16", "bfloat16", "float8", "float7", "float4", "float1")
# the high-precision set; scalar error alone keeps float4 and below under the VQ targets
VQ_PRECISIONS = ("float64", "float32", "float16", "bfloat16", "float8", "float7")
CODEBOOK_BITS = (3, 5, 8, 10, 13, 15)
SEEDS = (0, 1, 2, 3, 4)
DEFAULT_INIT = "positive:0"

CSV_SCHEMA_VERSION = 1
SIMULATE_COLUMNS = ("config_digest", "precision", "step", "fidelity", "raw_overlap")
AMPLITUDE_COLUMNS = ("config_digest", "step", "index", "re", "im")
HISTOGRAM_COLUMNS = ("config_digest", "bin", "lo", "hi", "count")
VQ_COLUMNS = ("config_digest", "m", "seed", "precision", "step", "fidelity", "raw_overlap")
FIT_COLUMNS = ("depth", "A", "k", "x0", "off", "residual")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    qubits: int = 6
    reps: int = 31
    init: str = DEFAULT_INIT
    precisions: tuple = SCALAR_PRECISIONS
    codebook_bits: tuple = CODEBOOK_BITS
    seeds: tuple = SEEDS
    slice_stride: int = 20
    bins: int = 64
    out: str = "results"
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.qubits < 1 or self.qubits > 14:
            raise ConfigError(f"--qubits must be in [1, 14], got {self.qubits}")
        if self.reps < 0:
            raise ConfigError(f"--reps must be >= 0, got {self.reps}")
        try:
            initial_state(self.qubits, parse_init(self.init))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        bad = []
        for p in self.precisions:
            try:
                parse_format(p)
            except ValueError:
                bad.append(p)
        if bad:
            raise ConfigError(f"invalid precision name(s): {', '.join(map(str, bad))}")
        if not self.precisions:
            raise ConfigError("no precisions given")
        wrong_m = [m for m in self.codebook_bits if not 1 <= m <= 24]
        if wrong_m:
            raise ConfigError(f"--codebook-bits must lie in [1, 24], got {wrong_m}")
        if self.slice_stride < 1:
            raise ConfigError("--slice-stride must be >= 1")
        if self.bins < 1:
            raise ConfigError("--bins must be >= 1")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return self

    def digest(self) -> str:
        """Identity of the experiment: every field except where and how it runs."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d["precisions"] = [parse_format(p).name for p in self.precisions]
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def circuit(self):
        return build_benchmark(self.qubits, self.reps)

    def psi0(self):
        return initial_state(self.qubits, self.init)


@dataclass
class RunRecord:
    command: str
    config_digest: str
    config: dict
    outputs: list
    wall_time_s: float
    version: str = __version__
    backend: str = field(default_factory=backend_name)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _trace(reference, states):
    f = [fidelity(r, s) for r, s in zip(reference, states)]
    raw = [raw_overlap(r, s) for r, s in zip(reference, states)]
    return np.array(f), np.array(raw)


# -- scalar sweep ---------------------------------------------------------


def scalar_sweep(cfg: ExperimentConfig) -> dict:
    """``{precision name: (fidelity array, raw overlap array)}``, steps 0..d."""
    spec, psi0 = cfg.circuit(), cfg.psi0()
    ref = reference_trace(spec, psi0)
    out = {}
    for p in cfg.precisions:
        name = parse_format(p).name
        out[name] = _trace(ref, collect_states(spec, psi0, name))
    return out


def cmd_simulate(cfg: ExperimentConfig) -> Path:
    cfg.validate()
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    rows = []
    for name, (f, raw) in scalar_sweep(cfg).items():
        for t in range(f.size):
            rows.append((digest, name, t, fmt_float(f[t]), fmt_float(raw[t])))
    path = out / "simulate.csv"
    _write_csv(path, SIMULATE_COLUMNS, rows)
    RunRecord("simulate", digest, asdict(cfg), [path.name], time.perf_counter() - t0).write(
        out / "simulate.run.json"
    )
    return path


# -- amplitude dump -------------------------------------------------------


def amplitude_histogram(magnitudes: np.ndarray, bins: int):
    hi = max(1.0, float(magnitudes.max())) if magnitudes.size else 1.0
    counts, edges = np.histogram(magnitudes, bins=bins, range=(0.0, hi))
    return counts, edges


def cmd_dump_amplitudes(cfg: ExperimentConfig) -> tuple:
    cfg.validate()
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    states = reference_trace(cfg.circuit(), cfg.psi0())
    rows = []
    for t, s in enumerate(states):
        for i, z in enumerate(s.amps):
            rows.append((digest, t, i, fmt_float(z.real), fmt_float(z.imag)))
    amp_path = out / "amplitudes.csv"
    _write_csv(amp_path, AMPLITUDE_COLUMNS, rows)

    mags = np.abs(np.concatenate([s.amps for s in states]))
    counts, edges = amplitude_histogram(mags, cfg.bins)
    hist_rows = [
        (digest, b, fmt_float(edges[b]), fmt_float(edges[b + 1]), int(counts[b])) for b in range(cfg.bins)
    ]
    hist_path = out / "magnitude_hist.csv"
    _write_csv(hist_path, HISTOGRAM_COLUMNS, hist_rows)
    RunRecord(
        "dump-amplitudes", digest, asdict(cfg), [amp_path.name, hist_path.name], time.perf_counter() - t0
    ).write(out / "dump-amplitudes.run.json")
    return amp_path, hist_path


# -- vector quantization sweep --------------------------------------------


def _vq_job(args):
    cfg, pool, m, seed = args
    spec, psi0 = cfg.circuit(), cfg.psi0()
    ref = reference_trace(spec, psi0)
    cb = train_codebook(pool, m, seed=seed, n=cfg.qubits)
    runs = {}
    for p in cfg.precisions:
        name = parse_format(p).name
        states = []
        run_vq_circuit(spec, psi0, name, cb, tap=lambda t, s: states.append(s))
        runs[name] = (_trace(ref, states), pack_state(states[-1], cb))
    return m, seed, cb, runs


def vq_sweep(cfg: ExperimentConfig, pool=None):
    """Yield ``(m, seed, codebook, {precision: ((fid, raw), final packed state)})``."""
    if pool is None:
        pool = collect_pool(cfg.circuit(), cfg.psi0())
    for m in cfg.codebook_bits:
        if len(pool) < 1 << m:
            raise ConfigError(f"pool of {len(pool)} amplitudes is smaller than 2^{m} codewords")
    jobs = [(cfg, pool, m, s) for m in cfg.codebook_bits for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            yield from ex.map(_vq_job, jobs)
    else:
        yield from map(_vq_job, jobs)


def cmd_vq(cfg: ExperimentConfig, observe=None) -> Path:
    """Write vq.csv, codebooks and final packed states.

    ``observe(m, seed, codebook, runs)`` sees each sweep result as it lands.
    """
    cfg.validate()
    t0 = time.perf_counter()
    out = Path(cfg.out)
    (out / "codebooks").mkdir(parents=True, exist_ok=True)
    (out / "states").mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    rows = []
    files = []
    for m, seed, cb, runs in vq_sweep(cfg):
        if observe is not None:
            observe(m, seed, cb, runs)
        cb_path = out / "codebooks" / f"codebook_m{m}_seed{seed}.qvqc"
        write_codebook(cb_path, cb)
        files.append(str(cb_path.relative_to(out)))
        for name, ((f, raw), packed) in runs.items():
            st_path = out / "states" / f"final_m{m}_seed{seed}_{name}.qvqs"
            write_packed_state(st_path, packed)
            files.append(str(st_path.relative_to(out)))
            for t in range(f.size):
                rows.append((digest, m, seed, name, t, fmt_float(f[t]), fmt_float(raw[t])))
    path = out / "vq.csv"
    _write_csv(path, VQ_COLUMNS, rows)
    RunRecord("vq", digest, asdict(cfg), [path.name] + files, time.perf_counter() - t0).write(
        out / "vq.run.json"
    )
    return path


# -- fitting --------------------------------------------------------------


def read_vq_csv(path) -> dict:
    """``{(m, step): [fidelity, ...]}`` over all seeds and precisions."""
    data: dict = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(VQ_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise ConfigError(f"{path}: missing column(s) {sorted(missing)}")
            for lineno, row in enumerate(reader, 2):
                try:
                    key = (int(row["m"]), int(row["step"]))
                    f = float(row["fidelity"])
                except (TypeError, ValueError):
                    raise ConfigError(f"{path}:{lineno}: malformed row") from None
                if not np.isfinite(f):
                    raise ConfigError(f"{path}:{lineno}: non-finite fidelity")
                data.setdefault(key, []).append(f)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    return data


def slice_fits(data: dict, stride: int = 20) -> list:
    """Logistic fit of mean fidelity vs m at every ``stride``-th step."""
    ms = sorted({m for m, _ in data})
    if len(ms) < 4:
        raise ConfigError(f"need at least 4 codebook widths to fit, found {ms}")
    last = max(t for _, t in data)
    fits = []
    for d in range(stride, last + 1, stride):
        pts = [(m, float(np.mean(data[m, d]))) for m in ms if (m, d) in data]
        fits.append(fit_logistic(pts, depth=d))
    return fits


def cmd_fit(vq_csv, out_dir, stride: int = 20, min_depth: int = 50) -> tuple:
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = Path(vq_csv).read_bytes() if Path(vq_csv).exists() else b""
    data = read_vq_csv(vq_csv)
    fits = slice_fits(data, stride)
    fit_path = out / "fits.csv"
    _write_csv(
        fit_path,
        FIT_COLUMNS,
        [(f.depth, *(fmt_float(v) for v in (*f.params, f.residual))) for f in fits],
    )
    try:
        tm = fit_trend(fits, min_depth=min_depth, provenance="vq-csv-sha256:" + hashlib.sha256(raw).hexdigest())
    except ValueError as e:
        raise ConfigError(str(e)) from None
    trend_path = out / "trend.json"
    trend_path.write_text(tm.to_json())
    RunRecord(
        "fit",
        hashlib.sha256(raw).hexdigest()[:16],
        {"vq_csv": str(vq_csv), "slice_stride": stride, "min_depth": min_depth},
        [fit_path.name, trend_path.name],
        time.perf_counter() - t0,
    ).write(out / "fit.run.json")
    return fit_path, trend_path


def read_trend(path) -> TrendModel:
    try:
        return TrendModel.from_json(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}: malformed trend file ({e})") from None


@dataclass(frozen=True)
class Budget:
    fidelity: float
    depth: float
    qubits: int
    m: float

    @property
    def bits(self) -> int:
        return int(np.ceil(self.m))

    @property
    def conservative_bits(self) -> int:
        return self.bits + 1

    @property
    def state_bits(self) -> int:
        return self.bits << self.qubits

    def report(self) -> str:
        return (
            f"target fidelity   {self.fidelity:g}\n"
            f"depth             {self.depth:g}\n"
            f"model m           {self.m:.6f}\n"
            f"ceil(m)           {self.bits}\n"
            f"ceil(m)+1         {self.conservative_bits}  (conservative budget)\n"
            f"state size        {self.state_bits} bits  (ceil(m) * 2^{self.qubits})\n"
        )


def estimate(tm: TrendModel, f: float, d: float, qubits: int) -> Budget:
    from .analysis import estimate_bits

    try:
        m = estimate_bits(f, d, tm)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return Budget(f, d, qubits, m)
