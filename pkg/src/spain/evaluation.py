"""Degradation, metrics, experiment orchestration and statistics."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .frames import FrameParams
from .inpaint import SolverConfig, inpaint_signal

log = logging.getLogger(__name__)

GAP_LENGTHS_MS = tuple(range(5, 55, 5))
CSV_HEADER = ("signal_id", "algorithm", "gap_length_ms", "gap_index", "seed",
              "snr_db", "runtime_s", "converged_frac")


class InfeasiblePlacement(ValueError):
    pass


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------

def snr(reference: np.ndarray, restored: np.ndarray) -> float:
    """``10 log10(||x||^2 / ||x - x_hat||^2)`` in dB; ``inf`` for a perfect match."""
    x = np.asarray(reference, dtype=float)
    xh = np.asarray(restored, dtype=float)
    if x.shape != xh.shape:
        raise ValueError("reference and restored segments differ in length")
    energy = float(x @ x)
    if energy == 0.0:
        raise ValueError("SNR is undefined for an all-zero reference")
    err = x - xh
    error = float(err @ err)
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(energy / error)


# ---------------------------------------------------------------------------
# gaps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapSpec:
    gaps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple((int(s), int(n)) for s, n in self.gaps))
        for (s0, n0), (s1, _) in zip(self.gaps, self.gaps[1:]):
            if s1 < s0 + n0:
                raise ValueError("gaps must be sorted and disjoint")
        if any(n <= 0 or s < 0 for s, n in self.gaps):
            raise ValueError("gaps need a nonnegative start and positive length")

    def __len__(self):
        return len(self.gaps)

    def __iter__(self):
        return iter(self.gaps)

    def to_text(self) -> str:
        return "".join(f"{s},{n}\n" for s, n in self.gaps)

    @classmethod
    def from_text(cls, text: str) -> "GapSpec":
        gaps = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                start, length = (int(v) for v in line.split(","))
            except ValueError:
                raise ValueError(f"line {lineno}: expected 'start_sample,length_samples'") from None
            gaps.append((start, length))
        return cls(tuple(sorted(gaps)))


def gap_samples(length_ms: float, sample_rate: int) -> int:
    return int(round(length_ms * sample_rate / 1000.0))


def make_gaps(signal_length: int, sample_rate: int, gap_length_ms: float, count: int = 6,
              min_spacing: int | None = None, rng_seed=0, max_tries: int = 10000) -> GapSpec:
    """Random non-overlapping gaps, rejection sampled.

    Each gap is at least ``min_spacing`` samples from its neighbours and from
    both signal edges.  ``min_spacing`` defaults to four 64 ms windows.
    """
    if count == 0:
        return GapSpec()
    length = gap_samples(gap_length_ms, sample_rate)
    if length < 1:
        raise ValueError("gap shorter than one sample")
    if min_spacing is None:
        min_spacing = 4 * gap_samples(64, sample_rate)
    lo, hi = min_spacing, signal_length - min_spacing - length
    need = count * length + (count + 1) * min_spacing
    if hi < lo or need > signal_length:
        raise InfeasiblePlacement(
            f"{count} gaps of {length} samples with spacing {min_spacing} "
            f"do not fit in {signal_length} samples")
    rng = np.random.default_rng(rng_seed)
    for _ in range(max_tries):
        starts = np.sort(rng.integers(lo, hi + 1, size=count))
        if np.all(np.diff(starts) >= length + min_spacing):
            return GapSpec(tuple((int(s), length) for s in starts))
    raise InfeasiblePlacement(f"no valid placement found in {max_tries} draws")


def shrink_gaps(spec: GapSpec, length: int) -> GapSpec:
    """Gaps of ``length`` samples centred inside the gaps of ``spec``."""
    if any(n < length for _, n in spec):
        raise ValueError(f"cannot shrink gaps of {spec} to {length} samples")
    return GapSpec(tuple((s + (n - length) // 2, length) for s, n in spec))


def _check_bounds(spec: GapSpec, n: int):
    for s, length in spec:
        if s + length > n:
            raise ValueError(f"gap ({s}, {length}) outside a signal of {n} samples")


def gap_mask(n: int, spec: GapSpec) -> np.ndarray:
    _check_bounds(spec, n)
    mask = np.ones(n, dtype=bool)
    for s, length in spec:
        mask[s:s + length] = False
    return mask


def apply_gaps(signal: np.ndarray, spec: GapSpec) -> tuple[np.ndarray, np.ndarray]:
    """Zero the gap samples; returns ``(degraded, mask)`` with mask False on gaps."""
    x = np.asarray(signal, dtype=float)
    mask = gap_mask(len(x), spec)
    return np.where(mask, x, 0.0), mask


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRecord:
    signal_id: str
    algorithm: str
    gap_length_ms: float
    gap_index: int
    seed: int
    snr_db: float
    runtime_s: float
    converged_frac: float

    def key(self):
        return (self.signal_id, self.algorithm, self.gap_length_ms, self.seed, self.gap_index)


@dataclass
class ExperimentConfig:
    """What to run.  ``signals`` holds ``(signal_id, samples, sample_rate)``.

    With ``nested_gaps`` the gaps of every length are centred on the gaps
    drawn for the longest length, so lengths are compared at the same
    positions; otherwise each length gets its own placement.
    """

    signals: Sequence[tuple]
    algorithms: Sequence[str] = ("aspain", "sspain-ht", "janssen", "omp")
    gap_lengths_ms: Sequence[float] = GAP_LENGTHS_MS
    seeds: Sequence[int] = (0,)
    gap_count: int = 6
    window_ms: float = 64.0
    hop_ms: float = 16.0
    redundancy: int = 2
    min_spacing: int | None = None
    solvers: SolverConfig = field(default_factory=SolverConfig)
    record_runtime: bool = True
    workers: int = 1
    fft_friendly: bool = True
    nested_gaps: bool = True


def _place_gaps(signal_id, n, fs, length_ms, seed, cfg) -> GapSpec:
    if not cfg.nested_gaps:
        return make_gaps(n, fs, length_ms, cfg.gap_count, cfg.min_spacing,
                         instance_seed(signal_id, length_ms, seed))
    # every length reuses the gap centres drawn for the longest one
    outer = max(cfg.gap_lengths_ms)
    spec = make_gaps(n, fs, outer, cfg.gap_count, cfg.min_spacing,
                     instance_seed(signal_id, outer, seed))
    return shrink_gaps(spec, gap_samples(length_ms, fs))


def instance_seed(signal_id: str, gap_length_ms: float, seed: int) -> list[int]:
    return [int(seed), zlib.crc32(signal_id.encode()), int(round(gap_length_ms * 1000))]


def _run_instance(args) -> list[ResultRecord]:
    signal_id, samples, fs, length_ms, seed, cfg = args
    frame_params = FrameParams.from_ms(cfg.window_ms, cfg.hop_ms, fs, cfg.redundancy,
                                      fft_friendly=cfg.fft_friendly)
    records = []
    try:
        spec = _place_gaps(signal_id, len(samples), fs, length_ms, seed, cfg)
    except InfeasiblePlacement as exc:
        log.error("%s, %s ms, seed %d: %s", signal_id, length_ms, seed, exc)
        return records
    degraded, mask = apply_gaps(samples, spec)
    for algorithm in cfg.algorithms:
        t0 = time.perf_counter()
        try:
            result = inpaint_signal(degraded, mask, frame_params, algorithm, cfg.solvers)
        except Exception as exc:  # recorded, the run goes on
            log.error("%s/%s/%s ms/seed %d failed: %s", signal_id, algorithm, length_ms, seed, exc)
            for gi in range(len(spec)):
                records.append(ResultRecord(signal_id, algorithm, float(length_ms), gi, seed,
                                            math.nan, math.nan, 0.0))
            continue
        elapsed = time.perf_counter() - t0 if cfg.record_runtime else math.nan
        for gi, (start, length) in enumerate(spec):
            value = snr(samples[start:start + length], result.samples[start:start + length])
            records.append(ResultRecord(signal_id, algorithm, float(length_ms), gi, seed,
                                        value, elapsed, result.converged_fraction))
    return records


def run_experiment(config: ExperimentConfig) -> list[ResultRecord]:
    """Degrade every (signal, gap length, seed) once and restore it with every
    algorithm; one record per gap and algorithm, sorted by identity."""
    jobs = [(sid, np.asarray(x, dtype=float), fs, length, seed, config)
            for sid, x, fs in config.signals
            for length in config.gap_lengths_ms
            for seed in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(_run_instance, jobs))
    else:
        chunks = [_run_instance(job) for job in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    return sorted(records, key=ResultRecord.key)


def default_workers() -> int:
    """``$SPAIN_WORKERS``, else one process per available CPU."""
    value = os.environ.get("SPAIN_WORKERS")
    if value is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
                   else os.cpu_count() or 1)
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"SPAIN_WORKERS must be an integer, got {value!r}") from None


def _fmt(value: float) -> str:
    return repr(float(value))


def records_to_csv(records: Iterable[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(records, key=ResultRecord.key):
        writer.writerow([r.signal_id, r.algorithm, _fmt(r.gap_length_ms), r.gap_index, r.seed,
                         _fmt(r.snr_db), _fmt(r.runtime_s), _fmt(r.converged_frac)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[ResultRecord]:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    return [ResultRecord(row[0], row[1], float(row[2]), int(row[3]), int(row[4]),
                         float(row[5]), float(row[6]), float(row[7])) for row in reader]


class Summary(NamedTuple):
    algorithm: str
    gap_length_ms: float
    n: int
    mean_snr: float
    ci_low: float
    ci_high: float


def summarize(records: Iterable[ResultRecord], draws: int = 10000, level: float = 0.95,
              rng_seed: int = 0) -> list[Summary]:
    """Mean per-gap SNR and its bootstrap CI for each (algorithm, gap length)."""
    groups: dict[tuple[str, float], list[float]] = {}
    for r in records:
        groups.setdefault((r.algorithm, r.gap_length_ms), []).append(r.snr_db)
    out = []
    for (algo, length), values in sorted(groups.items()):
        values = [v for v in values if not math.isnan(v)]
        mean = float(np.mean(values)) if values else math.nan
        if len(values) >= 2 and all(math.isfinite(v) for v in values):
            lo, hi = bootstrap_ci(values, draws, level, rng_seed)
        else:
            lo = hi = mean
        out.append(Summary(algo, length, len(values), mean, lo, hi))
    return out


def mean_table(records: Iterable[ResultRecord]) -> dict[str, dict[float, float]]:
    """``{algorithm: {gap_length_ms: mean SNR}}``."""
    table: dict[str, dict[float, float]] = {}
    for s in summarize(records, draws=0):
        table.setdefault(s.algorithm, {})[s.gap_length_ms] = s.mean_snr
    return table


def format_summary(summaries: Sequence[Summary]) -> str:
    lines = [f"{'algorithm':<12} {'gap_ms':>7} {'n':>4} {'mean_dB':>9} {'ci_low':>9} {'ci_high':>9}"]
    for s in summaries:
        lines.append(f"{s.algorithm:<12} {s.gap_length_ms:>7g} {s.n:>4d} {s.mean_snr:>9.3f} "
                     f"{s.ci_low:>9.3f} {s.ci_high:>9.3f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def bootstrap_ci(samples: Sequence[float], draws: int = 10000, level: float = 0.95,
                 rng_seed=0) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("bootstrap needs at least two samples")
    if draws < 1:
        m = float(x.mean())
        return m, m
    rng = np.random.default_rng(rng_seed)
    means = x[rng.integers(0, x.size, size=(draws, x.size))].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


def signed_rank_statistics(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, np.ndarray]:
    """``(W+, W-, tie counts)`` of the differences ``a - b``, zeros discarded,
    tied magnitudes given their mid-rank."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d[d != 0.0]
    if d.size == 0:
        return 0.0, 0.0, np.zeros(0)
    ranks = rankdata(np.abs(d))
    _, ties = np.unique(np.abs(d), return_counts=True)
    return float(ranks[d > 0].sum()), float(ranks[d < 0].sum()), ties


def wilcoxon_signed_rank_one_tailed(a: Sequence[float], b: Sequence[float]) -> float:
    """p-value for ``median(a - b) > 0`` (normal approximation with
    continuity and tie corrections)."""
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    if len(a) < 10:
        raise ValueError("the normal approximation needs at least 10 pairs")
    w_plus, w_minus, ties = signed_rank_statistics(a, b)
    n = ties.sum()
    if n == 0:
        return 1.0
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
    if var <= 0:
        return 1.0 if w_plus <= mean else 0.0
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    return float(norm.sf(z))
