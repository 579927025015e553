"""Reference inpainting methods: Janssen AR interpolation and per-frame OMP."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg import solve, solve_toeplitz
from scipy.signal import fftconvolve

from .solvers import FrameProblem, PairPursuit, n_groups, project_feasible_time
from .frames import frame_synthesis

log = logging.getLogger(__name__)


class SingularSystemWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class JanssenParams:
    """``ar_order=None`` selects ``min(3 * longest gap run + 2, w / 3)``,
    kept below the number of reliable samples in the frame."""

    ar_order: int | None = None
    iterations: int = 100

    def __post_init__(self):
        if self.ar_order is not None and self.ar_order < 1:
            raise ValueError("ar_order must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")


def longest_run(mask: np.ndarray) -> int:
    """Length of the longest run of missing (False) entries."""
    missing = np.concatenate([[0], (~np.asarray(mask, bool)).astype(int), [0]])
    edges = np.flatnonzero(np.diff(missing))
    if edges.size == 0:
        return 0
    return int((edges[1::2] - edges[::2]).max())


def auto_order(mask: np.ndarray) -> int:
    w = len(mask)
    n_reliable = int(np.count_nonzero(mask))
    return max(1, min(3 * longest_run(mask) + 2, int(round(w / 3)), n_reliable - 1))


def fit_ar(x: np.ndarray, order: int) -> np.ndarray:
    """Prediction-error filter ``[1, b_1 .. b_p]`` by the autocorrelation method.

    Yule-Walker equations on the biased autocorrelation, solved by
    Levinson-Durbin recursion.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    spec = np.fft.rfft(x, n=2 * n)
    r = np.fft.irfft(np.abs(spec) ** 2, n=2 * n)[:order + 1] / n
    if r[0] <= 0.0:
        return np.concatenate([[1.0], np.zeros(order)])
    b = solve_toeplitz(r[:order], -r[1:order + 1])
    return np.concatenate([[1.0], b])


def prediction_error(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``B x``: full convolution of ``x`` (zero outside the frame) with ``c``."""
    return np.convolve(x, c, mode="full")


def ar_functional(x: np.ndarray, c: np.ndarray) -> float:
    e = prediction_error(x, c)
    return float(e @ e)


def _filter_acf(c: np.ndarray) -> np.ndarray:
    """Lags 0..p of the autocorrelation of ``c``."""
    p = len(c) - 1
    return fftconvolve(c, c[::-1])[p:]


def _gram_block(c: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``(B^T B)[idx][:, idx]``; the full Gram matrix is the Toeplitz matrix of
    the filter autocorrelation."""
    p = len(c) - 1
    acf = _filter_acf(c)
    lag = np.abs(idx[:, None] - idx[None, :])
    return np.where(lag <= p, acf[np.minimum(lag, p)], 0.0)


def _solve_missing(c: np.ndarray, idx: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    p = len(c) - 1
    if idx[-1] - idx[0] + 1 == idx.size:
        # contiguous run: symmetric positive definite Toeplitz, Levinson solve
        acf = _filter_acf(c)
        col = np.zeros(idx.size)
        col[:min(p + 1, idx.size)] = acf[:min(p + 1, idx.size)]
        return solve_toeplitz(col, rhs)
    G = _gram_block(c, idx)
    try:
        return cho_solve(cho_factor(G, lower=True), rhs)
    except LinAlgError:
        warnings.warn("singular Janssen system, adding 1e-10 diagonal loading",
                      SingularSystemWarning, stacklevel=3)
        load = 1e-10 * max(float(np.max(np.diag(G))), 1e-300)
        return solve(G + load * np.eye(idx.size), rhs, assume_a="sym")


def janssen_frame(problem: FrameProblem, params: JanssenParams = JanssenParams(),
                  trace: list | None = None) -> np.ndarray:
    """Janssen interpolation of the missing samples of one frame.

    Alternates an AR fit on the current estimate with the exact minimisation
    of the prediction-error energy ``||B x||^2`` over the missing samples,
    ``B`` being the convolution matrix of ``[1, b_1 .. b_p]`` applied to the
    zero-extended frame.  The AR fit by the autocorrelation method minimises
    the same energy over the coefficients, so neither half step increases it.
    If ``trace`` is a list, the energies ``(before, after)`` each sample
    update are appended to it.
    """
    mask = problem.mask
    x = project_feasible_time(problem.observed, problem)
    missing = np.flatnonzero(~mask)
    if missing.size == 0:
        return x
    n_reliable = problem.length - missing.size
    p = params.ar_order if params.ar_order is not None else auto_order(mask)
    if p >= n_reliable:
        raise ValueError(f"AR order {p} needs more than {n_reliable} reliable samples")
    w = problem.length
    for _ in range(params.iterations):
        c = fit_ar(x, p)
        before = ar_functional(x, c) if trace is not None else None
        # B^T B applied to the reliable part: correlation with the filter acf
        known = np.where(mask, x, 0.0)
        back = fftconvolve(known, fftconvolve(c, c[::-1]))[p:p + w]
        x[missing] = _solve_missing(c, missing, -back[missing])
        if trace is not None:
            trace.append((before, ar_functional(x, c)))
    return x


def omp_inpaint_frame(problem: FrameProblem, redundancy: int = 2,
                      max_atoms: int | None = None, residual_tol: float = 0.0) -> np.ndarray:
    """OMP inpainting of one frame.

    Atoms are the conjugate-pair atoms of the frame restricted to the
    reliable samples and renormalised there.  Pursuit stops once the residual
    on the reliable samples drops to ``residual_tol``, after ``max_atoms``
    groups, or when the atoms would outnumber the reliable samples.
    """
    mask = problem.mask
    n_reliable = int(mask.sum())
    if n_reliable == 0:
        raise ValueError("frame has no reliable samples")
    if mask.all():
        return problem.observed.copy()
    w = problem.length
    P = redundancy * w
    limit = n_groups(P) if max_atoms is None else min(max_atoms, n_groups(P))
    pursuit = PairPursuit(problem.observed, P, mask, score="projection")
    while (len(pursuit.groups) < limit and len(pursuit.cols) + 2 <= n_reliable
           and np.linalg.norm(pursuit.residual) > residual_tol):
        pursuit.step()
    pursuit.finalize()
    estimate = frame_synthesis(pursuit.coefficients(), w)
    return project_feasible_time(estimate, problem)
