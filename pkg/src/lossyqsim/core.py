"""State vectors, gate embedding and the quantized gate-apply step.

Qubit ``q`` is bit ``q`` of the basis index (qubit 0 is least significant),
so a one-qubit gate on qubit ``q`` expands to ``I(2^(n-q-1)) x U x I(2^q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .numerics import PrecisionFormat, parse_format

__all__ = [
    "StateVector",
    "GateOp",
    "SplitGateMatrix",
    "expand_gate",
    "apply_gate",
    "run_circuit",
    "MAX_QUBITS",
    "collect_states",
]

MAX_QUBITS = 14

Observer = Callable[[int, "StateVector"], None]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """``amps[i]`` is the amplitude of basis ket ``|binary(i)>``."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if amps.size != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} amplitudes, got {amps.size}")
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def from_parts(cls, n: int, re: np.ndarray, im: np.ndarray) -> "StateVector":
        return cls(n, re + 1j * im)

    @property
    def re(self) -> np.ndarray:
        return self.amps.real

    @property
    def im(self) -> np.ndarray:
        return self.amps.imag

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def __len__(self) -> int:
        return self.amps.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.amps, other.amps)


@dataclass(frozen=True, eq=False)
class GateOp:
    """A small unitary acting on ``targets``.

    For multi-qubit gates ``targets[0]`` is the most significant bit of the
    gate's local index.
    """

    u: np.ndarray
    targets: tuple
    label: str = ""

    def __post_init__(self):
        u = np.array(self.u, dtype=np.complex128)
        targets = tuple(int(t) for t in self.targets)
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] != 1 << len(targets):
            raise ValueError(f"matrix shape {u.shape} does not match {len(targets)} target(s)")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets {targets}")
        if min(targets) < 0:
            raise ValueError(f"negative target in {targets}")
        err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
        if err >= 1e-12:
            raise ValueError(f"gate {self.label!r} is not unitary (|u'u - I| = {err:.3g})")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "targets", targets)

    def key(self, n: int) -> tuple:
        return (self.label, self.targets, n, self.u.tobytes())


@dataclass(frozen=True, eq=False)
class SplitGateMatrix:
    """Real and imaginary parts of an expanded ``2^n x 2^n`` gate."""

    R: np.ndarray
    J: np.ndarray
    label: str = field(default="")

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    def full(self) -> np.ndarray:
        return self.R + 1j * self.J


_EXPAND_CACHE: dict = {}


def _embed(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    dim = 1 << n
    t = len(targets)
    idx = np.arange(dim)
    # local index of each basis state: targets[0] is the top local bit
    local = np.zeros(dim, dtype=np.int64)
    rest_mask = dim - 1
    for pos, q in enumerate(targets):
        local |= ((idx >> q) & 1) << (t - 1 - pos)
        rest_mask &= ~(1 << q)
    rest = idx & rest_mask
    same_rest = rest[:, None] == rest[None, :]
    full = np.where(same_rest, u[local[:, None], local[None, :]], 0.0)
    return full.astype(np.complex128)


def expand_gate(g: GateOp, n: int) -> SplitGateMatrix:
    """Embed ``g`` into the full ``2^n``-dimensional space, split into R and J."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    if max(g.targets) >= n:
        raise ValueError(f"target {max(g.targets)} out of range for {n} qubits")
    key = g.key(n)
    hit = _EXPAND_CACHE.get(key)
    if hit is not None:
        return hit
    full = _embed(g.u, g.targets, n)
    split = SplitGateMatrix(
        _frozen(np.ascontiguousarray(full.real)),
        _frozen(np.ascontiguousarray(full.imag)),
        g.label,
    )
    _EXPAND_CACHE[key] = split
    return split


def apply_gate(g: SplitGateMatrix, psi: StateVector, fmt="float64") -> StateVector:
    """One quantized gate application.

    R, J and both halves of the state are rounded to ``fmt`` before the
    four real matrix-vector products; products accumulate in double and the
    result is returned unrounded.
    """
    fmt = parse_format(fmt)
    if g.dim != len(psi):
        raise ValueError(f"gate dimension {g.dim} does not match state length {len(psi)}")
    re, im = kernels.gate_apply(
        g.R,
        g.J,
        np.ascontiguousarray(psi.re),
        np.ascontiguousarray(psi.im),
        *fmt.params,
    )
    return StateVector.from_parts(psi.n, re, im)


def run_circuit(
    circuit: Iterable[GateOp],
    psi0: StateVector,
    fmt="float64",
    tap: Optional[Observer] = None,
) -> StateVector:
    """Apply ``circuit`` gate by gate.

    ``tap(step, state)`` is called with step 0 for ``psi0`` and then with
    step ``t`` after gate ``t``.
    """
    fmt = parse_format(fmt)
    psi = psi0
    if tap is not None:
        tap(0, psi)
    for t, gate in enumerate(circuit, start=1):
        psi = apply_gate(expand_gate(gate, psi.n), psi, fmt)
        if tap is not None:
            tap(t, psi)
    return psi


def collect_states(circuit, psi0, fmt: PrecisionFormat | str = "float64") -> list:
    """Every state of a run, ``psi0`` included."""
    states = []
    run_circuit(circuit, psi0, fmt, tap=lambda t, s: states.append(s))
    return states
