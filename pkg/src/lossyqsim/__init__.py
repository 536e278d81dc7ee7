"""State-vector quantum simulation with lossy amplitude storage."""

__version__ = "0.1.0"

from .numerics import PrecisionFormat, parse_format, quantize_array, quantize_complex, quantize_scalar  # noqa: E402
from .core import GateOp, StateVector, apply_gate, collect_states, expand_gate, run_circuit  # noqa: E402
from .circuits import build_benchmark, build_qft, initial_state  # noqa: E402
from .vq import Codebook, nearest_codeword, pack_state, run_vq_circuit, train_codebook, unpack_state  # noqa: E402
from .analysis import estimate_bits, fidelity, fit_logistic, fit_trend  # noqa: E402
