"""Reduced-precision scalar float formats.

Every quantizer takes a double and returns the double value of the nearest
number representable in the target format (round-to-nearest, ties-to-even).
Magnitudes beyond the largest finite value saturate to it.

``floatk`` keeps the 5-bit exponent of IEEE half precision and only the top
``k`` bits of its 10-bit significand.  It is produced in two steps: round to
float16, then round the significand field of that float16 to ``k`` bits
(carry may ripple into the exponent; subnormals round at the same absolute
bit position).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

__all__ = [
    "BitLayout",
    "PrecisionFormat",
    "FORMAT_NAMES",
    "parse_format",
    "quantize_scalar",
    "quantize_complex",
    "quantize_array",
    "to_bits16",
    "from_bits16",
]

FORMAT_NAMES = (
    ("float64", "float32", "float16", "bfloat16")
    + tuple(f"float{k}" for k in range(1, 11))
)


@dataclass(frozen=True)
class BitLayout:
    sign_bits: int
    exponent_bits: int
    significand_bits: int
    container_bits: int

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def emin(self) -> int:
        """Exponent of the smallest normal number."""
        return 1 - self.bias

    @property
    def max_finite(self) -> float:
        p = self.significand_bits
        return math.ldexp(2.0 - math.ldexp(1.0, -p), self.bias)


_LAYOUTS = {
    "float64": BitLayout(1, 11, 52, 64),
    "float32": BitLayout(1, 8, 23, 32),
    "float16": BitLayout(1, 5, 10, 16),
    "bfloat16": BitLayout(1, 8, 7, 16),
}


@dataclass(frozen=True)
class PrecisionFormat:
    """A quantization target.  ``k`` is only set for ``floatk``."""

    kind: str
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind == "floatk":
            if not isinstance(self.k, int) or not 1 <= self.k <= 10:
                raise ValueError(f"floatk needs an integer k in [1, 10], got {self.k!r}")
        elif self.kind in _LAYOUTS:
            if self.k is not None:
                raise ValueError(f"{self.kind} takes no k")
        else:
            raise ValueError(f"unknown format kind {self.kind!r}")

    @property
    def name(self) -> str:
        return f"float{self.k}" if self.kind == "floatk" else self.kind

    @property
    def layout(self) -> BitLayout:
        if self.kind == "floatk":
            return BitLayout(1, 5, self.k, 16)
        return _LAYOUTS[self.kind]

    @property
    def max_finite(self) -> float:
        return self.layout.max_finite

    @property
    def bits_per_complex(self) -> int:
        """Storage cost of one amplitude (real + imaginary) in the container."""
        return 2 * self.layout.container_bits

    @property
    def params(self) -> tuple:
        """Flat kernel parameter tuple, see :mod:`lossyqsim.kernels`."""
        if self.kind == "float64":
            return (0, -1, 0.0, 0, -1, 0.0)
        if self.kind == "floatk":
            half = _LAYOUTS["float16"]
            lay = self.layout
            second = -1 if self.k == 10 else self.k
            return (half.emin, 10, half.max_finite, lay.emin, second, lay.max_finite)
        lay = self.layout
        return (lay.emin, lay.significand_bits, lay.max_finite, 0, -1, 0.0)

    def __str__(self) -> str:
        return self.name


def parse_format(name) -> PrecisionFormat:
    """Parse ``"float64"``, ``"bfloat16"``, ``"float1"`` ... ``"float10"``."""
    if isinstance(name, PrecisionFormat):
        return name
    key = str(name).strip().lower()
    if key in _LAYOUTS:
        return PrecisionFormat(key)
    if key.startswith("float") and key[5:].isdigit():
        k = int(key[5:])
        if 1 <= k <= 10:
            return PrecisionFormat("floatk", k)
    raise ValueError(
        f"unknown precision {name!r}; expected one of {', '.join(FORMAT_NAMES)}"
    )


def quantize_array(x, fmt) -> np.ndarray:
    """Quantize every element of a real array; returns a new float64 array."""
    fmt = parse_format(fmt)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if np.isnan(x).any():
        raise ValueError("cannot quantize NaN")
    if np.isinf(x).any():
        raise ValueError("cannot quantize an infinite value")
    return kernels.quantize(x, *fmt.params)


def quantize_scalar(x: float, fmt) -> float:
    return float(quantize_array(np.array([x]), fmt)[0])


def quantize_complex(z: complex, fmt) -> complex:
    z = complex(z)
    out = quantize_array(np.array([z.real, z.imag]), fmt)
    return complex(out[0], out[1])


# -- 16-bit containers (serialization only) -------------------------------


def to_bits16(x, fmt) -> np.ndarray:
    """Pack quantized values into their 16-bit container as ``uint16``.

    floatk values use the float16 bit layout with the unused low significand
    bits zero.
    """
    fmt = parse_format(fmt)
    q = quantize_array(x, fmt)
    if fmt.kind == "bfloat16":
        # quantized values are exact in float32; the top half is the bfloat16
        return (q.astype(np.float32).view(np.uint32) >> 16).astype(np.uint16)
    if fmt.kind in ("float16", "floatk"):
        return q.astype(np.float16).view(np.uint16)
    raise ValueError(f"{fmt.name} has no 16-bit container")


def from_bits16(bits, fmt) -> np.ndarray:
    fmt = parse_format(fmt)
    bits = np.asarray(bits, dtype=np.uint16)
    if fmt.kind == "bfloat16":
        return (bits.astype(np.uint32) << 16).view(np.float32).astype(np.float64)
    if fmt.kind in ("float16", "floatk"):
        return bits.view(np.float16).astype(np.float64)
    raise ValueError(f"{fmt.name} has no 16-bit container")
