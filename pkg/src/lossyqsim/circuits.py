"""The repeated-QFT benchmark circuit and initial states."""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass

import numpy as np

from .core import GateOp, StateVector

__all__ = [
    "CircuitSpec",
    "hadamard",
    "controlled_rotation",
    "build_qft",
    "build_benchmark",
    "initial_state",
    "parse_init",
    "dump_circuit",
    "parse_circuit",
]

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def hadamard(q: int) -> GateOp:
    return GateOp(_H, (q,), "H")


def _root_of_unity(k: int) -> complex:
    # exact for the half and quarter turns so R and J carry clean 0/1 entries
    exact = {0: 1.0 + 0j, 1: -1.0 + 0j, 2: 1j}
    if k in exact:
        return exact[k]
    return cmath.exp(2j * math.pi / (1 << k))


def controlled_rotation(k: int, control: int, target: int) -> GateOp:
    """Controlled ``R_k = diag(1, exp(2 pi i / 2^k))``."""
    if k < 1:
        raise ValueError(f"rotation index must be >= 1, got {k}")
    u = np.diag([1.0, 1.0, 1.0, _root_of_unity(k)])
    return GateOp(u, (control, target), f"CR{k}")


def build_qft(n: int) -> list:
    """QFT without the terminal swap network: n(n+1)/2 gates.

    The output is the DFT of the input in bit-reversed order.
    """
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    gates = []
    for j in range(n - 1, -1, -1):
        gates.append(hadamard(j))
        for c in range(j - 1, -1, -1):
            gates.append(controlled_rotation(j - c + 1, c, j))
    return gates


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    repetitions: int
    gates: tuple

    @property
    def depth(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __len__(self) -> int:
        return len(self.gates)


def build_benchmark(n: int = 6, r: int = 31) -> CircuitSpec:
    """``r`` back-to-back QFT blocks.  ``r = 0`` gives the empty circuit."""
    if r < 0:
        raise ValueError("repetitions must be non-negative")
    block = build_qft(n)
    return CircuitSpec(n, r, tuple(block) * r)


def initial_state(n: int, kind="uniform", amplitudes=None) -> StateVector:
    """Build ``psi0``.

    ``kind`` is one of ``"uniform"``, ``("basis", i)``, ``("positive", seed)``,
    ``("random", seed)`` or ``"custom"`` (with ``amplitudes``).  The string
    forms ``"basis:5"``, ``"positive:0"``, ``"random:0"`` are accepted too.

    ``positive`` draws real amplitudes uniformly from [0, 1) and normalizes;
    ``random`` draws i.i.d. complex Gaussians (a Haar-random state).
    """
    if isinstance(kind, str) and kind != "custom":
        kind = parse_init(kind)
    dim = 1 << n
    if kind == "uniform":
        return StateVector(n, np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128))
    if kind == "custom":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.size != dim:
            raise ValueError(f"expected {dim} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"custom amplitudes are not normalized (sum |a|^2 = {norm!r})")
        return StateVector(n, amps)
    name, arg = kind
    if name == "basis":
        if not 0 <= arg < dim:
            raise ValueError(f"basis index {arg} out of range for {n} qubits")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[arg] = 1.0
        return StateVector(n, amps)
    if name == "positive":
        amps = np.random.default_rng(arg).random(dim).astype(np.complex128)
        return StateVector(n, amps / np.linalg.norm(amps))
    if name == "random":
        rng = np.random.default_rng(arg)
        amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return StateVector(n, amps / np.linalg.norm(amps))
    raise ValueError(f"unknown initial state kind {kind!r}")


def parse_init(text: str):
    """``uniform`` | ``basis:<i>`` | ``positive:<seed>`` | ``random:<seed>``."""
    text = text.strip()
    if text == "uniform":
        return "uniform"
    m = re.fullmatch(r"(basis|positive|random):(\d+)", text)
    if not m:
        raise ValueError(
            f"bad initial state {text!r}; use uniform, basis:<i>, positive:<seed> or random:<seed>"
        )
    return (m.group(1), int(m.group(2)))


def dump_circuit(gates) -> str:
    """One gate per line: ``H q<j>`` or ``CR<k> q<control> q<target>``."""
    lines = []
    for g in gates:
        lines.append(" ".join([g.label] + [f"q{t}" for t in g.targets]))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_circuit(text: str) -> list:
    gates = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        qs = [int(p[1:]) for p in parts[1:] if p.startswith("q")]
        if parts[0] == "H" and len(qs) == 1:
            gates.append(hadamard(qs[0]))
        elif parts[0].startswith("CR") and len(qs) == 2:
            gates.append(controlled_rotation(int(parts[0][2:]), qs[0], qs[1]))
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    return gates
