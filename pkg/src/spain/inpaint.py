"""Signal-level inpainting: frame-wise restoration combined by overlap-add."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .baselines import JanssenParams, janssen_frame, omp_inpaint_frame
from .frames import FrameParams, Frame, make_window, overlap_add, segment
from .solvers import FrameProblem, SpainParams, Variant, aspain_frame, sspain_frame

log = logging.getLogger(__name__)

ALGORITHMS = ("aspain", "sspain-ht", "sspain-omp", "janssen", "omp")

_VARIANTS = {
    "aspain": Variant.ANALYSIS,
    "sspain-ht": Variant.SYNTHESIS_HT,
    "sspain-omp": Variant.SYNTHESIS_OMP,
}


@dataclass(frozen=True)
class OMPParams:
    """Per-frame OMP baseline: at most ``max_atoms`` pair groups (``None``:
    an eighth of the window length), stopping once the reliable-sample
    residual falls below ``relative_tol`` times the observed frame norm."""

    max_atoms: int | None = None
    relative_tol: float = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    spain: SpainParams = field(default_factory=SpainParams)
    janssen: JanssenParams = field(default_factory=JanssenParams)
    omp: OMPParams = field(default_factory=OMPParams)


class InpaintResult(NamedTuple):
    samples: np.ndarray
    frames_processed: int
    frames_converged: int

    @property
    def converged_fraction(self) -> float:
        if self.frames_processed == 0:
            return 1.0
        return self.frames_converged / self.frames_processed


def _frame_masks(mask: np.ndarray, params: FrameParams) -> list[np.ndarray]:
    # padding past the end of the signal counts as reliable (known zeros)
    padded = [f.samples.astype(bool) for f in segment(~mask, params, windowed=False)]
    return [~m for m in padded]


def inpaint_signal(signal, mask, frame_params: FrameParams, algorithm: str = "aspain",
                   config: SolverConfig = SolverConfig()) -> InpaintResult:
    """Restore the samples of ``signal`` where ``mask`` is False.

    Only frames containing at least one missing sample are handed to the
    per-frame solver; the others pass through.  After overlap-add the
    reliable samples are copied back from the observation.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    y = np.asarray(getattr(signal, "samples", signal), dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != y.shape:
        raise ValueError("mask and signal lengths differ")
    if mask.all():
        return InpaintResult(y.copy(), 0, 0)

    observed = np.where(mask, y, 0.0)
    rectangular = algorithm == "janssen"
    frames = segment(observed, frame_params, windowed=not rectangular)
    masks = _frame_masks(mask, frame_params)
    win = make_window(frame_params.window, frame_params.window_length)
    redundancy = frame_params.redundancy

    out, processed, converged = [], 0, 0
    for index, (frame, fmask) in enumerate(zip(frames, masks)):
        if fmask.all():
            out.append(Frame(frame.samples * win if rectangular else frame.samples, frame.start))
            continue
        processed += 1
        problem = FrameProblem(frame.samples, fmask)
        ok = True
        if algorithm in _VARIANTS:
            params = _with_variant(config.spain, _VARIANTS[algorithm])
            solver = aspain_frame if algorithm == "aspain" else sspain_frame
            result = solver(problem, params, redundancy)
            restored, ok = result.restored, result.converged
            if not ok:
                log.warning("frame %d at sample %d did not converge after %d iterations",
                            index, frame.start, result.iterations)
        elif algorithm == "janssen":
            restored = janssen_frame(problem, config.janssen) * win
        else:
            tol = config.omp.relative_tol * float(np.linalg.norm(problem.observed))
            max_atoms = config.omp.max_atoms or max(1, frame_params.window_length // 8)
            restored = omp_inpaint_frame(problem, redundancy, max_atoms, tol)
        converged += ok
        out.append(Frame(restored, frame.start))

    restored = overlap_add(out, frame_params, len(y))
    restored[mask] = y[mask]
    return InpaintResult(restored, processed, converged)


def _with_variant(params: SpainParams, variant: Variant) -> SpainParams:
    if params.variant is variant:
        return params
    return SpainParams(params.s, params.r, params.epsilon, params.max_pairs, variant)
