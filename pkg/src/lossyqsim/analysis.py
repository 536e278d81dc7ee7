"""Fidelity traces, logistic rate-fidelity fits and codeword budgets.

The fidelity of fixed-depth slices against codebook width ``m`` is modelled as

    f(m) = A / (1 + exp(-k (m - x0))) + off

with ``A``, ``k``, ``off`` treated as depth-independent and ``x0`` growing
like ``a ln(d) + b``.  Inverting that model gives the number of index bits
needed for a target fidelity at a given depth.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import StateVector, collect_states

__all__ = [
    "FidelityTrace",
    "LogisticFit",
    "TrendModel",
    "fidelity",
    "raw_overlap",
    "reference_trace",
    "fidelity_trace",
    "logistic",
    "fit_logistic",
    "fit_trend",
    "estimate_bits",
    "BOUNDS",
]

# parameter order everywhere: A, k, x0, off
BOUNDS = (
    np.array([0.0, 0.01, 0.0, -0.5]),
    np.array([1.5, 10.0, 64.0, 1.0]),
)
N_STARTS = 8
MIN_TREND_DEPTH = 50
MIN_TREND_SLICES = 10


# -- fidelity -------------------------------------------------------------


def _check_pair(reference: StateVector, test: StateVector):
    if reference.n != test.n:
        raise ValueError(f"qubit counts differ: {reference.n} vs {test.n}")
    ref = np.asarray(reference.amps, dtype=np.complex128)
    tst = np.asarray(test.amps, dtype=np.complex128)
    nref = float(np.vdot(ref, ref).real)
    if abs(nref - 1.0) > 1e-10:
        raise ValueError(f"reference is not normalized (|ref|^2 = {nref!r})")
    ntst = float(np.vdot(tst, tst).real)
    if ntst == 0.0:
        raise ValueError("test state is the zero vector")
    return ref, tst, ntst


def raw_overlap(reference: StateVector, test: StateVector) -> float:
    """``|<ref|test>|^2`` without renormalizing ``test``."""
    ref, tst, _ = _check_pair(reference, test)
    return float(abs(np.vdot(ref, tst)) ** 2)


def fidelity(reference: StateVector, test: StateVector) -> float:
    """Pure-state fidelity ``|<ref|test>|^2 / <test|test>``.

    Quantized states drift off the unit sphere, so ``test`` is normalized
    here (only here; the simulated state itself is never touched).
    """
    ref, tst, ntst = _check_pair(reference, test)
    return float(abs(np.vdot(ref, tst)) ** 2 / ntst)


def reference_trace(circuit, psi0: StateVector) -> list:
    """The float64 trajectory, ``psi0`` first: the fidelity reference."""
    return collect_states(circuit, psi0, "float64")


@dataclass
class FidelityTrace:
    run_id: str
    steps: np.ndarray
    fidelity: np.ndarray
    raw: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> float:
        return float(self.fidelity[-1])


def fidelity_trace(reference: Sequence[StateVector], states: Sequence[StateVector], run_id="", **meta):
    if len(reference) != len(states):
        raise ValueError(f"trace lengths differ: {len(reference)} vs {len(states)}")
    f = np.array([fidelity(r, s) for r, s in zip(reference, states)])
    raw = np.array([raw_overlap(r, s) for r, s in zip(reference, states)])
    return FidelityTrace(run_id, np.arange(len(states)), f, raw, dict(meta))


# -- logistic model -------------------------------------------------------


def logistic(m, A, k, x0, off):
    z = np.clip(-k * (np.asarray(m, dtype=np.float64) - x0), -700.0, 700.0)
    return A / (1.0 + np.exp(z)) + off


def _residual_and_jacobian(p, m, f):
    A, k, x0, off = p
    z = np.clip(-k * (m - x0), -700.0, 700.0)
    s = 1.0 / (1.0 + np.exp(z))
    r = A * s + off - f
    ds = s * (1.0 - s)
    jac = np.column_stack([s, A * ds * (m - x0), -A * ds * k, np.ones_like(m)])
    return r, jac


def _lm(p0, m, f, lo, hi, max_iter=1000):
    """Levenberg-Marquardt with box projection.  Returns (params, cost)."""
    p = np.clip(np.asarray(p0, dtype=np.float64), lo, hi)
    r, jac = _residual_and_jacobian(p, m, f)
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        g = jac.T @ r
        h = jac.T @ jac
        scale = np.maximum(np.diag(h), 1e-12)
        try:
            step = np.linalg.solve(h + lam * np.diag(scale), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        trial = np.clip(p + step, lo, hi)
        r_t, jac_t = _residual_and_jacobian(trial, m, f)
        cost_t = float(r_t @ r_t)
        if cost_t < cost:
            converged = cost - cost_t <= 1e-15 * max(cost, 1e-300) or np.all(
                np.abs(trial - p) <= 1e-14 * (1.0 + np.abs(p))
            )
            p, r, jac, cost = trial, r_t, jac_t, cost_t
            lam = max(lam / 10.0, 1e-15)
            if converged or cost == 0.0:
                break
        else:
            lam *= 10.0
            if lam > 1e16:
                break
    return p, cost


@dataclass(frozen=True)
class LogisticFit:
    A: float
    k: float
    x0: float
    off: float
    depth: int
    residual: float
    start_residuals: tuple = field(default=(), compare=False, repr=False)

    @property
    def params(self) -> tuple:
        return (self.A, self.k, self.x0, self.off)

    def __call__(self, m):
        return logistic(m, *self.params)


def fit_logistic(points: Iterable, depth: int = 0, n_starts: int = N_STARTS) -> LogisticFit:
    """Least-squares fit of the logistic model to ``(m, fidelity)`` pairs.

    Bounded Levenberg-Marquardt from ``n_starts`` deterministic jitters of
    A = max - min, off = min, x0 = median(m), k = 1 (the first start is the
    unjittered guess); the lowest residual wins.
    """
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (m, fidelity) pairs")
    m, f = pts[:, 0], pts[:, 1]
    if not np.isfinite(pts).all():
        raise ValueError("non-finite value in fit data")
    if np.unique(m).size < 4:
        raise ValueError(f"need at least 4 distinct m values, got {np.unique(m).size}")
    lo, hi = BOUNDS
    base = np.array([f.max() - f.min(), 1.0, float(np.median(m)), f.min()])
    rng = np.random.default_rng(20240601)
    best = None
    costs = []
    for s in range(n_starts):
        p0 = base.copy()
        if s:
            u = rng.uniform(-1.0, 1.0, 4)
            p0 = base + np.array([0.1 * u[0], 0.0, 2.0 * u[2], 0.1 * u[3]])
            p0[1] = base[1] * math.exp(u[1])
        p, cost = _lm(p0, m, f, lo, hi)
        costs.append(math.sqrt(cost))
        if best is None or cost < best[1]:
            best = (p, cost)
    p, cost = best
    return LogisticFit(
        float(p[0]), float(p[1]), float(p[2]), float(p[3]), int(depth), math.sqrt(cost), tuple(costs)
    )


# -- trend over depth -----------------------------------------------------


@dataclass(frozen=True)
class TrendModel:
    """A, k, off held constant; x0(d) = a ln(d) + b."""

    A: float
    k: float
    off: float
    a: float
    b: float
    provenance: str = ""

    def x0(self, d) -> float:
        return self.a * np.log(d) + self.b

    def predict(self, m, d):
        return logistic(m, self.A, self.k, self.x0(d), self.off)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrendModel":
        data = json.loads(text)
        return cls(**{k: data[k] for k in ("A", "k", "off", "a", "b")}, provenance=data.get("provenance", ""))


def fit_trend(fits: Sequence[LogisticFit], min_depth: int = MIN_TREND_DEPTH, provenance: str = "") -> TrendModel:
    """Medians for A, k, off; least squares of x0 against ln(depth).

    Slices shallower than ``min_depth`` are dropped: there every codebook
    still gives fidelity near 1 and the logistic is poorly determined.
    """
    use = [f for f in fits if f.depth >= max(min_depth, 1)]
    depths = np.array([f.depth for f in use], dtype=np.float64)
    if np.unique(depths).size < MIN_TREND_SLICES:
        raise ValueError(
            f"need fits at >= {MIN_TREND_SLICES} distinct depths >= {min_depth}, got {np.unique(depths).size}"
        )
    x0 = np.array([f.x0 for f in use])
    design = np.column_stack([np.log(depths), np.ones_like(depths)])
    (a, b), *_ = np.linalg.lstsq(design, x0, rcond=None)
    if not provenance:
        h = hashlib.sha256()
        for f in use:
            h.update(np.array([f.depth, *f.params], dtype="<f8").tobytes())
        provenance = "fits-sha256:" + h.hexdigest()
    return TrendModel(
        A=float(np.median([f.A for f in use])),
        k=float(np.median([f.k for f in use])),
        off=float(np.median([f.off for f in use])),
        a=float(a),
        b=float(b),
        provenance=provenance,
    )


def estimate_bits(f: float, d: float, tm: TrendModel) -> float:
    """Codebook index width m at which the trend model reaches fidelity f at depth d."""
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    if not 0.0 < f <= 1.0:
        raise ValueError(f"fidelity must lie in (0, 1], got {f}")
    lo, hi = tm.off, tm.A + tm.off
    if not lo < f < hi:
        raise ValueError(f"fidelity {f} outside the model's reachable range ({lo:.6g}, {hi:.6g})")
    return float(tm.x0(d) - math.log(tm.A / (f - tm.off) - 1.0) / tm.k)
