"""Command-line front end: degrade, inpaint, bench and make-corpus.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 infeasible degradation.
The worker count for ``bench`` defaults to the ``SPAIN_WORKERS`` variable, else the CPU count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import FORMATS, AudioSignal, WavError, read_wav, write_wav
from .baselines import JanssenParams
from .corpus import STYLES, make_clip
from .evaluation import (GAP_LENGTHS_MS, ExperimentConfig, GapSpec, InfeasiblePlacement,
                         apply_gaps, default_workers, format_summary, make_gaps,
                         records_to_csv, run_experiment, summarize)
from .frames import FrameParams
from .inpaint import ALGORITHMS, OMPParams, SolverConfig, inpaint_signal
from .solvers import SpainParams

log = logging.getLogger("spain")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("gap lengths must be positive")
    return values


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algo_list(text):
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
    return algos


def _add_frame_flags(p):
    p.add_argument("--win-ms", type=_positive_float, default=64.0, help="window length (ms)")
    p.add_argument("--hop-ms", type=_positive_float, default=16.0, help="window shift (ms)")
    p.add_argument("--redundancy", type=_positive_int, default=2)
    p.add_argument("--exact-frames", action="store_true",
                   help="use the exact ms-derived window length instead of an FFT-friendly one")


def _add_solver_flags(p):
    p.add_argument("--s", type=_positive_int, default=1, help="sparsity increment")
    p.add_argument("--r", type=_positive_int, default=1, help="iterations per increment")
    p.add_argument("--epsilon", type=float, default=0.1, help="ADMM stopping tolerance")
    p.add_argument("--max-pairs", type=_positive_int, default=None,
                   help="sparsity cap in coefficient pairs (default: all)")
    p.add_argument("--janssen-order", type=_positive_int, default=None,
                   help="AR order (default: from the gap length)")
    p.add_argument("--janssen-iterations", type=_positive_int, default=100)
    p.add_argument("--omp-atoms", type=_positive_int, default=None,
                   help="OMP pair budget per frame (default: window/8)")
    p.add_argument("--omp-tol", type=float, default=1e-3,
                   help="OMP residual tolerance relative to the frame norm")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spain", description="Audio inpainting with sparse and AR methods.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degrade", help="punch random gaps into a WAV file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("gaps", help="gap-spec file to write")
    p.add_argument("--gap-ms", type=_positive_float, required=True)
    p.add_argument("--count", type=_nonneg_int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", type=_nonneg_int, default=None,
                   help="minimum samples between gaps and edges (default: four 64 ms windows)")
    p.add_argument("--format", choices=("auto",) + FORMATS, default="auto")

    p = sub.add_parser("inpaint", help="restore the gaps of a degraded WAV file")
    p.add_argument("input")
    p.add_argument("gaps", help="gap-spec file")
    p.add_argument("output")
    p.add_argument("--algo", choices=ALGORITHMS, default="aspain")
    _add_frame_flags(p)
    _add_solver_flags(p)
    p.add_argument("--format", choices=("auto",) + FORMATS, default="auto")

    p = sub.add_parser("bench", help="run the gap-length benchmark over a WAV corpus")
    p.add_argument("corpus_dir")
    p.add_argument("output", help="results CSV")
    p.add_argument("--algos", type=_algo_list, default=["aspain", "sspain-ht", "janssen", "omp"])
    p.add_argument("--gap-lengths", type=_float_list, default=list(GAP_LENGTHS_MS),
                   help="comma-separated gap lengths in ms")
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--count", type=_nonneg_int, default=6)
    p.add_argument("--spacing", type=_nonneg_int, default=None)
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="parallel processes (default: $SPAIN_WORKERS or the CPU count)")
    p.add_argument("--timings", action="store_true",
                   help="record wall-clock runtimes (the CSV is then not reproducible)")
    p.add_argument("--draws", type=_nonneg_int, default=10000, help="bootstrap draws")
    p.add_argument("--independent-gaps", action="store_true",
                   help="draw a separate placement per gap length instead of nesting "
                        "shorter gaps inside the longest ones")
    _add_frame_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("make-corpus", help="write the synthetic test clips as WAV files")
    p.add_argument("output_dir")
    p.add_argument("--seconds", type=_positive_float, default=10.0)
    p.add_argument("--rate", type=_positive_int, default=44100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=FORMATS, default="float32")
    return parser


def frame_params_from(args) -> FrameParams:
    def make(rate):
        try:
            return FrameParams.from_ms(args.win_ms, args.hop_ms, rate, args.redundancy,
                                       fft_friendly=not args.exact_frames)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    make(44100)  # validate before touching files
    return make


def solver_config_from(args) -> SolverConfig:
    try:
        return SolverConfig(
            spain=SpainParams(args.s, args.r, args.epsilon, args.max_pairs),
            janssen=JanssenParams(args.janssen_order, args.janssen_iterations),
            omp=OMPParams(args.omp_atoms, args.omp_tol),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_provenance(output, args, inputs=(), extra=None) -> Path:
    """Sidecar ``<output>.provenance.json`` with every resolved flag."""
    flags = {k: v for k, v in vars(args).items() if k != "verbose"}
    record = {
        "command": args.command,
        "flags": flags,
        "argv": sys.argv[1:],
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "inputs": {str(p): _sha256(p) for p in inputs},
    }
    if extra:
        record.update(extra)
    path = Path(str(output) + ".provenance.json")
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _out_format(choice, signal):
    if choice != "auto":
        return choice
    return signal.source_format or "float32"


def cmd_degrade(args) -> int:
    signal = read_wav(args.input)
    spec = make_gaps(len(signal), signal.sample_rate, args.gap_ms, args.count,
                     args.spacing, args.seed)
    degraded, mask = apply_gaps(signal.samples, spec)
    if args.count == 0:
        degraded = signal.samples
    write_wav(args.output, AudioSignal(degraded, signal.sample_rate), _out_format(args.format, signal))
    Path(args.gaps).write_text(spec.to_text())
    write_provenance(args.output, args, [args.input],
                     {"masked_samples": int((~mask).sum())})
    log.info("%d gaps, %d samples masked", len(spec), int((~mask).sum()))
    return EXIT_OK


def cmd_inpaint(args) -> int:
    make_params = frame_params_from(args)
    config = solver_config_from(args)
    gap_path = Path(args.gaps)
    if not gap_path.is_file():
        raise FileNotFoundError(f"gap file {gap_path} not found")
    signal = read_wav(args.input)
    try:
        spec = GapSpec.from_text(gap_path.read_text())
        degraded, mask = apply_gaps(signal.samples, spec)
    except ValueError as exc:
        raise WavError(f"{gap_path}: {exc}") from None
    params = make_params(signal.sample_rate)
    result = inpaint_signal(degraded, mask, params, args.algo, config)
    if result.frames_converged < result.frames_processed:
        log.warning("%d of %d frames did not converge",
                    result.frames_processed - result.frames_converged, result.frames_processed)
    restored = signal.samples if len(spec) == 0 else result.samples
    write_wav(args.output, AudioSignal(restored, signal.sample_rate), _out_format(args.format, signal))
    write_provenance(args.output, args, [args.input, args.gaps], {
        "frame": {"window_length": params.window_length, "hop": params.hop,
                  "redundancy": params.redundancy, "window": params.window},
        "frames_processed": result.frames_processed,
        "frames_converged": result.frames_converged,
    })
    return EXIT_OK


def load_corpus(directory) -> list[tuple[str, np.ndarray, int]]:
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory {root} not found")
    files = sorted(root.glob("*.wav"))
    if not files:
        raise WavError(f"no .wav files in {root}")
    signals = []
    for f in files:
        audio = read_wav(f)
        signals.append((f.stem, audio.samples, audio.sample_rate))
    return signals


def cmd_bench(args) -> int:
    frame_params_from(args)
    config = solver_config_from(args)
    workers = args.workers or default_workers()
    signals = load_corpus(args.corpus_dir)
    experiment = ExperimentConfig(
        signals=signals, algorithms=tuple(args.algos), gap_lengths_ms=tuple(args.gap_lengths),
        seeds=tuple(args.seeds), gap_count=args.count, window_ms=args.win_ms,
        hop_ms=args.hop_ms, redundancy=args.redundancy, min_spacing=args.spacing,
        solvers=config, record_runtime=args.timings, workers=workers,
        fft_friendly=not args.exact_frames, nested_gaps=not args.independent_gaps)
    records = run_experiment(experiment)
    Path(args.output).write_text(records_to_csv(records))
    print(format_summary(summarize(records, draws=args.draws)))
    if not args.timings:
        print("runtime_s left as nan for reproducible output; pass --timings to record it",
              file=sys.stderr)
    write_provenance(args.output, args, [Path(args.corpus_dir) / f"{sid}.wav" for sid, _, _ in signals],
                     {"records": len(records)})
    return EXIT_OK


def cmd_make_corpus(args) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for style in STYLES:
        clip = make_clip(style, args.seed, args.seconds, args.rate)
        write_wav(out / f"{style}.wav", AudioSignal(clip, args.rate), args.format)
        print(out / f"{style}.wav")
    return EXIT_OK


COMMANDS = {"degrade": cmd_degrade, "inpaint": cmd_inpaint, "bench": cmd_bench,
            "make-corpus": cmd_make_corpus}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"spain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasiblePlacement as exc:
        print(f"spain: infeasible degradation: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, WavError) as exc:
        print(f"spain: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"spain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
