"""``lossyqsim`` command line.

    lossyqsim simulate --precision float16,float4 --out results
    lossyqsim dump-amplitudes --out results
    lossyqsim vq --codebook-bits 8,13,15 --seeds 0,1,2,3,4 --out results
    lossyqsim fit results/vq.csv --out results
    lossyqsim estimate results/trend.json --fidelity 0.9 --depth 10000
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, harness
from .harness import ConfigError, ExperimentConfig

log = logging.getLogger("lossyqsim")


def _str_list(text: str) -> tuple:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(s) for s in _str_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    # argparse already exits with 2 on usage errors; keep that but route through one place
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, precisions) -> None:
    p.add_argument("--qubits", type=int, default=6)
    p.add_argument("--reps", type=int, default=31, help="QFT repetitions (default: 31)")
    p.add_argument(
        "--init",
        default=harness.DEFAULT_INIT,
        help="uniform | basis:<i> | positive:<seed> | random:<seed> (default: %(default)s)",
    )
    p.add_argument("--precision", type=_str_list, default=precisions, help="comma-separated format names")
    p.add_argument("--out", default="results")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lossyqsim", description=__doc__.splitlines()[0].strip("`"))
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="scalar-precision fidelity sweep")
    _add_common(p, harness.SCALAR_PRECISIONS)

    p = sub.add_parser("dump-amplitudes", help="reference amplitudes and magnitude histogram")
    _add_common(p, ("float64",))
    p.add_argument("--bins", type=int, default=64)

    p = sub.add_parser("vq", help="codebook training and vector-quantized runs")
    _add_common(p, harness.VQ_PRECISIONS)
    p.add_argument("--codebook-bits", type=_int_list, default=harness.CODEBOOK_BITS)
    p.add_argument("--seeds", type=_int_list, default=harness.SEEDS)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fit", help="logistic fits per depth slice and the depth trend")
    p.add_argument("vq_csv")
    p.add_argument("--slice-stride", type=int, default=20)
    p.add_argument("--min-depth", type=int, default=50)
    p.add_argument("--out", default="results")

    p = sub.add_parser("estimate", help="codeword bits for a target fidelity and depth")
    p.add_argument("trend")
    p.add_argument("--fidelity", "-f", type=float, required=True)
    p.add_argument("--depth", "-d", type=float, required=True)
    p.add_argument("--qubits", type=int, default=6)
    return ap


def _config(args) -> ExperimentConfig:
    kw = dict(qubits=args.qubits, reps=args.reps, init=args.init, precisions=tuple(args.precision), out=args.out)
    for name in ("codebook_bits", "seeds", "bins", "workers"):
        if hasattr(args, name):
            kw[name] = tuple(getattr(args, name)) if name in ("codebook_bits", "seeds") else getattr(args, name)
    return ExperimentConfig(**kw).validate()


def run(args) -> int:
    if args.command == "simulate":
        print(harness.cmd_simulate(_config(args)))
    elif args.command == "dump-amplitudes":
        for path in harness.cmd_dump_amplitudes(_config(args)):
            print(path)
    elif args.command == "vq":
        print(harness.cmd_vq(_config(args)))
    elif args.command == "fit":
        if args.slice_stride < 1:
            raise ConfigError("--slice-stride must be >= 1")
        for path in harness.cmd_fit(args.vq_csv, args.out, args.slice_stride, args.min_depth):
            print(path)
    elif args.command == "estimate":
        if args.qubits < 1:
            raise ConfigError("--qubits must be >= 1")
        budget = harness.estimate(harness.read_trend(args.trend), args.fidelity, args.depth, args.qubits)
        sys.stdout.write(budget.report())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return run(args)
    except ConfigError as e:
        print(f"lossyqsim: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
