"""Two-pass vector quantization of amplitudes in the complex plane.

Pass one runs the circuit uncompressed and pools every amplitude it visits.
A k-means codebook of up to ``2**m`` complex centroids is trained on that
pool.  Pass two re-runs the circuit at some scalar precision and snaps every
amplitude to its nearest codeword after each gate, so any state along the
way is representable by ``m * 2**n`` bits of indices.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import StateVector, apply_gate, collect_states, expand_gate
from .numerics import parse_format

__all__ = [
    "AmplitudePool",
    "Codebook",
    "PackedState",
    "collect_pool",
    "train_codebook",
    "nearest_codeword",
    "nearest_codewords",
    "round_to_codebook",
    "run_vq_circuit",
    "pack_state",
    "unpack_state",
    "write_codebook",
    "read_codebook",
    "write_packed_state",
    "read_packed_state",
]

MAX_ITER = 300
TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AmplitudePool:
    points: np.ndarray  # complex128, flat

    def __len__(self) -> int:
        return self.points.size

    def digest(self) -> bytes:
        return hashlib.sha256(_interleave(self.points)).digest()


@dataclass(frozen=True, eq=False)
class Codebook:
    """Centroids sorted by (re, im).

    ``len(centroids) <= 2**m``; it is smaller only when the training pool has
    fewer than ``2**m`` distinct points.  Indices are always ``m`` bits wide.
    """

    m: int
    centroids: np.ndarray
    seed: int = 0
    n: int = 0
    pool_digest: bytes = b"\0" * 32
    sse_history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.complex128).reshape(-1)
        if c.size == 0 or c.size > 1 << self.m:
            raise ValueError(f"codebook of width {self.m} cannot hold {c.size} centroids")
        if not np.isfinite(c).all():
            raise ValueError("codebook has non-finite centroids")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    def __len__(self) -> int:
        return self.centroids.size

    @property
    def re(self) -> np.ndarray:
        return self.centroids.real

    @property
    def im(self) -> np.ndarray:
        return self.centroids.imag

    def digest(self) -> bytes:
        return hashlib.sha256(_interleave(self.centroids)).digest()

    def is_sorted(self) -> bool:
        order = np.lexsort((self.im, self.re))
        return bool(np.array_equal(order, np.arange(len(self))))


@dataclass(frozen=True, eq=False)
class PackedState:
    n: int
    m: int
    codebook_digest: bytes
    payload: bytes

    @property
    def bit_length(self) -> int:
        return self.m << self.n


def _interleave(z: np.ndarray) -> bytes:
    return np.ascontiguousarray(np.asarray(z, dtype=np.complex128)).view("<f8").tobytes()


# -- pass one -------------------------------------------------------------


def collect_pool(circuit, psi0: StateVector) -> AmplitudePool:
    """Every amplitude of every state of a float64 run, ``psi0`` included."""
    states = collect_states(circuit, psi0, "float64")
    return AmplitudePool(np.concatenate([s.amps for s in states]))


# -- nearest codeword -----------------------------------------------------


def nearest_codewords(z, cb: Codebook) -> np.ndarray:
    """Index of the nearest centroid for each point; ties go to the lowest index."""
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    idx, _ = kernels.nearest(
        np.ascontiguousarray(z.real),
        np.ascontiguousarray(z.imag),
        np.ascontiguousarray(cb.re),
        np.ascontiguousarray(cb.im),
        np.arange(len(cb), dtype=np.int64),
    )
    return idx


def nearest_codeword(z: complex, cb: Codebook) -> int:
    return int(nearest_codewords(np.array([z]), cb)[0])


def round_to_codebook(psi: StateVector, cb: Codebook) -> StateVector:
    return StateVector(psi.n, cb.centroids[nearest_codewords(psi.amps, cb)])


# -- training -------------------------------------------------------------


def _assign(xr, xi, cr, ci):
    order = np.argsort(cr, kind="stable")
    return kernels.nearest(
        xr, xi, np.ascontiguousarray(cr[order]), np.ascontiguousarray(ci[order]), order.astype(np.int64)
    )


def _reseed_empty(cr, ci, counts, xr, xi, d2):
    """Move empty clusters onto the points farthest from their centroids."""
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return
    order = np.argsort(-d2, kind="stable")
    candidates = (p for p in order if d2[p] > 0.0)
    taken = set()
    for c in empty:
        for p in candidates:
            key = (xr[p], xi[p])
            if key not in taken:
                taken.add(key)
                cr[c], ci[c] = xr[p], xi[p]
                break
        else:
            # every point already sits on a centroid; leave the rest in place
            return


def train_codebook(
    pool: AmplitudePool,
    m: int,
    seed: int = 0,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    n: int = 0,
) -> Codebook:
    """Lloyd's k-means with k-means++ seeding on the pool viewed as 2-D points.

    Stops when no centroid moves by ``tol`` or more, after ``max_iter``
    iterations, or when an update fails to lower the SSE (it is then undone).  ``sse_history[i]`` is the sum of squared distances of the
    assignment made at iteration ``i``; the last entry scores the returned
    centroids.
    """
    if m < 0:
        raise ValueError("index width must be non-negative")
    k = 1 << m
    pts = pool.points
    if pts.size < k:
        raise ValueError(f"pool of {pts.size} points is smaller than 2^{m} = {k} codewords")
    if not np.isfinite(pts).all():
        raise ValueError("pool contains non-finite amplitudes")
    xr = np.ascontiguousarray(pts.real)
    xi = np.ascontiguousarray(pts.imag)

    draws = np.random.default_rng(seed).random(k)
    centers = kernels.kmeanspp(xr, xi, draws)
    cr = xr[centers].copy()
    ci = xi[centers].copy()

    sse = []
    prev = (cr, ci)
    for _ in range(max_iter):
        labels, d2 = _assign(xr, xi, cr, ci)
        cost = float(np.sum(d2))
        if sse and cost > sse[-1]:
            # near convergence a mean update can lose to summation rounding; keep the better one
            cr, ci = prev
            break
        sse.append(cost)
        sr, si, counts = kernels.cluster_sums(xr, xi, labels, cr, ci)
        nr, ni = cr.copy(), ci.copy()
        full = counts > 0
        nr[full] += sr[full] / counts[full]
        ni[full] += si[full] / counts[full]
        _reseed_empty(nr, ni, counts, xr, xi, d2)
        moved = float(np.max(np.hypot(nr - cr, ni - ci)))
        prev = (cr, ci)
        cr, ci = nr, ni
        if moved < tol:
            break
    _, d2 = _assign(xr, xi, cr, ci)
    cost = float(np.sum(d2))
    if cost > sse[-1]:
        cr, ci = prev
        cost = sse[-1]
    sse.append(cost)

    c = np.unique(cr + 1j * ci)  # sorts by (re, im) and collapses duplicates
    return Codebook(
        m=m,
        centroids=c,
        seed=int(seed),
        n=int(n),
        pool_digest=pool.digest(),
        sse_history=tuple(sse),
    )


# -- pass two -------------------------------------------------------------


def run_vq_circuit(circuit, psi0: StateVector, fmt, cb: Codebook, tap=None) -> StateVector:
    """Gate-apply at ``fmt`` followed by codeword rounding, gate after gate.

    ``psi0`` is rounded before the first gate.  ``tap`` sees the rounded
    states, step 0 included.
    """
    fmt = parse_format(fmt)
    psi = round_to_codebook(psi0, cb)
    if tap is not None:
        tap(0, psi)
    for t, gate in enumerate(circuit, start=1):
        psi = apply_gate(expand_gate(gate, psi.n), psi, fmt)
        psi = round_to_codebook(psi, cb)
        if tap is not None:
            tap(t, psi)
    return psi


# -- bit packing ----------------------------------------------------------


def pack_state(psi: StateVector, cb: Codebook) -> PackedState:
    """Codeword indices, ``m`` bits each, MSB first, basis order, zero-padded."""
    idx = nearest_codewords(psi.amps, cb)
    if not np.array_equal(cb.centroids[idx], psi.amps):
        bad = int(np.flatnonzero(cb.centroids[idx] != psi.amps)[0])
        raise ValueError(f"amplitude {bad} ({psi.amps[bad]!r}) is not a codeword")
    m = cb.m
    if m == 0:
        payload = b""
    else:
        shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        payload = np.packbits(bits.reshape(-1)).tobytes()
    return PackedState(psi.n, m, cb.digest(), payload)


def unpack_state(p: PackedState, cb: Codebook) -> StateVector:
    if p.m != cb.m:
        raise ValueError(f"state uses {p.m}-bit indices, codebook has {cb.m}")
    if p.codebook_digest != cb.digest():
        raise ValueError("packed state was encoded with a different codebook")
    count = 1 << p.n
    if p.m == 0:
        idx = np.zeros(count, dtype=np.int64)
    else:
        bits = np.unpackbits(np.frombuffer(p.payload, dtype=np.uint8), count=p.bit_length)
        weights = 1 << np.arange(p.m - 1, -1, -1, dtype=np.int64)
        idx = bits.reshape(count, p.m).astype(np.int64) @ weights
    if idx.max() >= len(cb):
        raise ValueError("packed index refers past the end of the codebook")
    return StateVector(p.n, cb.centroids[idx])


# -- files ----------------------------------------------------------------
#
# Codebook:     "QVQC" u16 version, u16 n, u16 m, u64 seed, 32B pool sha256,
#               u32 count, then count (re, im) pairs as <f8.
# PackedState:  "QVQS" u16 version, u16 n, u16 m, 32B codebook sha256,
#               u32 payload bytes, then the payload.

FILE_VERSION = 1
_CB_HEAD = struct.Struct("<4sHHHQ32sI")
_PS_HEAD = struct.Struct("<4sHHH32sI")


def codebook_to_bytes(cb: Codebook) -> bytes:
    head = _CB_HEAD.pack(b"QVQC", FILE_VERSION, cb.n, cb.m, cb.seed, cb.pool_digest, len(cb))
    return head + _interleave(cb.centroids)


def codebook_from_bytes(data: bytes) -> Codebook:
    if len(data) < _CB_HEAD.size:
        raise ValueError("truncated codebook header")
    magic, version, n, m, seed, digest, count = _CB_HEAD.unpack_from(data)
    if magic != b"QVQC":
        raise ValueError(f"not a codebook file (magic {magic!r})")
    if version != FILE_VERSION:
        raise ValueError(f"unsupported codebook version {version}")
    body = data[_CB_HEAD.size :]
    if len(body) != 16 * count:
        raise ValueError(f"codebook body holds {len(body)} bytes, expected {16 * count}")
    c = np.frombuffer(body, dtype="<f8").reshape(count, 2)
    return Codebook(m=m, centroids=c[:, 0] + 1j * c[:, 1], seed=seed, n=n, pool_digest=digest)


def write_codebook(path, cb: Codebook) -> None:
    with open(path, "wb") as fh:
        fh.write(codebook_to_bytes(cb))


def read_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        return codebook_from_bytes(fh.read())


def write_packed_state(path, p: PackedState) -> None:
    with open(path, "wb") as fh:
        fh.write(_PS_HEAD.pack(b"QVQS", FILE_VERSION, p.n, p.m, p.codebook_digest, len(p.payload)))
        fh.write(p.payload)


def read_packed_state(path) -> PackedState:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _PS_HEAD.size:
        raise ValueError("truncated packed-state header")
    magic, version, n, m, digest, size = _PS_HEAD.unpack_from(data)
    if magic != b"QVQS":
        raise ValueError(f"not a packed-state file (magic {magic!r})")
    if version != FILE_VERSION:
        raise ValueError(f"unsupported packed-state version {version}")
    payload = data[_PS_HEAD.size :]
    if len(payload) != size or size != ((m << n) + 7) // 8:
        raise ValueError("packed-state payload has the wrong length")
    return PackedState(n, m, digest, payload)
