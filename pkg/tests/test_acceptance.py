"""End-to-end acceptance checks, one test (or test pair) per criterion.

The benchmark-based checks share one full run of the default bench over the
synthetic corpus; a second full run is made for the determinism check.
"""

import time

import numpy as np
import pytest

from oracles import best_k_group_fit, best_k_groups
from spain.baselines import JanssenParams, janssen_frame
from spain.corpus import default_corpus
from spain.evaluation import (ExperimentConfig, bootstrap_ci, default_workers, mean_table,
                              records_to_csv, run_experiment, snr,
                              wilcoxon_signed_rank_one_tailed)
from spain.frames import FrameParams, frame_analysis, frame_synthesis, overlap_add, segment
from spain.inpaint import SolverConfig
from spain.solvers import (FrameProblem, SpainParams, Variant, aspain_frame,
                           hard_threshold_pairs, n_groups, omp_sparse_approx, sspain_frame)
from test_solvers import gap_snr, grid_frame

BENCH_ALGORITHMS = ("aspain", "sspain-ht", "janssen", "omp")
BENCH_SECONDS = 15 * 60
_timings: dict[str, float] = {}


def note(record_property, text):
    record_property("detail", text)
    print(text)


# ---------------------------------------------------------------------------

@pytest.mark.criterion("frame identity")
def test_frame_identity(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(1000):
        w = (2800, 1024, 256)[i % 3]
        P = (2, 3, 4)[i % 3] * w
        x = rng.standard_normal(w)
        back = frame_synthesis(frame_analysis(x, P), w)
        worst = max(worst, np.linalg.norm(back - x) / np.linalg.norm(x))

    params = FrameParams.from_ms(64, 16, 44100)
    signal = rng.standard_normal(10 * 44100)
    frames = segment(signal, params)
    rebuilt = overlap_add([f.samples for f in frames], params, signal.size)
    w = params.window_length
    interior = slice(w, signal.size - w)
    ola = np.linalg.norm((rebuilt - signal)[interior]) / np.linalg.norm(signal[interior])
    elapsed = time.perf_counter() - t0
    note(record_property, f"frame {worst:.1e}, overlap-add {ola:.1e}, {elapsed:.1f} s")
    assert worst < 1e-10
    assert ola < 1e-10
    assert elapsed < 5


def _subproblem_budget(key, elapsed):
    _timings[key] = elapsed
    return sum(_timings.get(k, 0.0) for k in ("hk", "omp"))


@pytest.mark.criterion("subproblem exactness")
def test_hard_threshold_equals_brute_force(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for P in (8, 12):
        for _ in range(100):
            z = rng.standard_normal(P) + 1j * rng.standard_normal(P)
            for k in range(n_groups(P) + 1):
                err, approx = best_k_groups(z, k)
                worst = max(worst, np.abs(hard_threshold_pairs(z, k) - approx).max())
    total = _subproblem_budget("hk", time.perf_counter() - t0)
    note(record_property, f"H_k max deviation {worst:.1e}")
    assert worst < 1e-12
    assert total < 30


@pytest.mark.criterion("subproblem exactness")
@pytest.mark.xfail(strict=True, reason="greedy pursuit misses the exact 2-pair fit on "
                   "small frames for a fraction of targets; see the ledger")
def test_omp_within_twice_brute_force(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    failures = {}
    for P in (8, 12):
        w = P // 2
        for k in (1, 2):
            bad = 0
            for _ in range(200):
                target = rng.standard_normal(w)
                opt = best_k_group_fit(target, k, P)
                if omp_sparse_approx(target, k).residual_norm > 2 * opt + 1e-12:
                    bad += 1
            failures[(P, k)] = bad
    total = _subproblem_budget("omp", time.perf_counter() - t0)
    note(record_property, "OMP > 2x optimum in " + ", ".join(
        f"P={P} k={k}: {n}/200" for (P, k), n in failures.items()) + f"; {total:.1f} s total")
    assert total < 30
    assert all(n == 0 for n in failures.values())


@pytest.mark.criterion("exact recovery")
def test_exact_recovery(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    w = 256
    worst = np.inf
    for solver, variant in ((aspain_frame, Variant.ANALYSIS),
                            (sspain_frame, Variant.SYNTHESIS_HT),
                            (sspain_frame, Variant.SYNTHESIS_OMP)):
        for n_pairs in (1, 2, 3):
            x = grid_frame(w, n_pairs, rng)
            mask = np.ones(w, bool)
            mask[rng.choice(w, size=w // 4, replace=False)] = False
            res = solver(FrameProblem(np.where(mask, x, 0.0), mask),
                         SpainParams(epsilon=1e-6, variant=variant))
            worst = min(worst, gap_snr(x, res.restored, mask))
    elapsed = time.perf_counter() - t0
    note(record_property, f"worst gap SNR {worst:.1f} dB, {elapsed:.1f} s")
    assert worst > 100
    assert elapsed < 10


@pytest.mark.criterion("Janssen oracle")
def test_janssen_oracle(record_property):
    # noise-free AR(1) realisation, one missing interior sample
    a, n, k = 0.9, 64, 30
    x = a ** np.arange(n)
    mask = np.ones(n, bool)
    mask[k] = False
    restored = janssen_frame(FrameProblem(np.where(mask, x, 0.0), mask),
                             JanssenParams(ar_order=1, iterations=100))
    error = abs(restored[k] - x[k])

    rng = np.random.default_rng(3)
    y = np.convolve(rng.standard_normal(600), [1.0, 0.6, 0.3])[:512] + np.sin(0.2 * np.arange(512))
    mask = np.ones(512, bool)
    mask[200:260] = False
    trace = []
    janssen_frame(FrameProblem(np.where(mask, y, 0.0), mask), JanssenParams(iterations=100), trace)
    values = [v for pair in trace for v in pair]
    rises = sum(b > a * (1 + 1e-12) for a, b in zip(values, values[1:]))
    note(record_property, f"AR(1) error {error:.1e}, {len(trace)} iterations, {rises} increases")
    assert error < 1e-6
    assert len(trace) == 100
    assert rises == 0


@pytest.mark.criterion("metric correctness")
def test_metrics(record_property):
    value = snr(np.array([1.0, 1.0]), np.array([1.0, 0.0]))

    samples = np.random.default_rng(4).standard_normal(100)
    lo, hi = bootstrap_ci(samples, draws=10000, rng_seed=5)
    analytic = 2 * 1.959963984540054 * samples.std(ddof=1) / np.sqrt(samples.size)
    ratio = (hi - lo) / analytic

    base = np.random.default_rng(6).standard_normal(20)
    p = wilcoxon_signed_rank_one_tailed(base + 0.5, base)
    note(record_property, f"snr {value:.5f} dB, CI width ratio {ratio:.3f}, p {p:.1e}")
    assert value == pytest.approx(3.0103, abs=1e-4)
    assert abs(ratio - 1) < 0.3
    assert p < 0.01


# ---------------------------------------------------------------------------
# benchmark criteria

def bench_config(**overrides):
    options = dict(algorithms=BENCH_ALGORITHMS, record_runtime=False, workers=default_workers())
    options.update(overrides)
    return ExperimentConfig(default_corpus(), **options)


@pytest.fixture(scope="session")
def bench():
    t0 = time.perf_counter()
    records = run_experiment(bench_config())
    return records, records_to_csv(records), time.perf_counter() - t0


def monotone_violations(means):
    """Increases of the mean SNR between consecutive gap lengths."""
    lengths = sorted(means)
    return [means[b] - means[a] for a, b in zip(lengths, lengths[1:]) if means[b] > means[a]]


@pytest.mark.slow
@pytest.mark.criterion("trend")
def test_trend_aspain_beats_omp(bench, record_property):
    records, _, elapsed = bench
    table = mean_table(records)
    for algorithm in BENCH_ALGORITHMS:
        print(algorithm, " ".join(f"{table[algorithm][g]:6.2f}" for g in sorted(table[algorithm])))
    behind = [g for g in table["aspain"] if g <= 40 and table["aspain"][g] < table["omp"][g]]
    note(record_property, f"A-SPAIN below OMP at {behind or 'no'} lengths <= 40 ms")
    assert not behind


@pytest.mark.slow
@pytest.mark.criterion("trend")
@pytest.mark.parametrize("algorithm", [
    "aspain", "sspain-ht", "janssen",
    pytest.param("omp", marks=pytest.mark.xfail(
        strict=True, reason="the OMP curve is flat within noise beyond 30 ms; see the ledger")),
])
def test_trend_monotone(bench, record_property, algorithm):
    records, _, _ = bench
    rises = monotone_violations(mean_table(records)[algorithm])
    note(record_property, f"{algorithm} increases " + (
        ", ".join(f"{v:.2f}" for v in rises) if rises else "none") + " dB")
    assert len(rises) <= 1
    assert all(v <= 0.5 for v in rises)


@pytest.mark.slow
@pytest.mark.criterion("trend")
def test_trend_bench_runtime(bench, record_property):
    _, _, elapsed = bench
    note(record_property, f"bench {elapsed / 60:.1f} min on {default_workers()} worker(s)")
    assert elapsed < BENCH_SECONDS


@pytest.mark.slow
@pytest.mark.criterion("Janssen iterations")
def test_janssen_iterations(bench, record_property):
    records, _, _ = bench
    lengths = [g for g in sorted(mean_table(records)["janssen"]) if g >= 20]
    one = run_experiment(bench_config(
        algorithms=("janssen",), gap_lengths_ms=lengths,
        solvers=SolverConfig(janssen=JanssenParams(iterations=1))))
    many = [r.snr_db for r in records if r.algorithm == "janssen" and r.gap_length_ms >= 20]
    few = [r.snr_db for r in one]
    gain = np.mean(many) - np.mean(few)
    note(record_property, f"100 vs 1 iterations: {np.mean(many):.2f} vs {np.mean(few):.2f} dB")
    assert len(many) == len(few)
    assert gain >= 1.0


@pytest.mark.slow
@pytest.mark.criterion("determinism")
def test_determinism(bench, record_property, tmp_path):
    _, first, _ = bench
    second = records_to_csv(run_experiment(bench_config()))
    (tmp_path / "a.csv").write_text(first)
    (tmp_path / "b.csv").write_text(second)
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    note(record_property, f"{first.count(chr(10))} CSV lines, identical: {same}")
    assert same
