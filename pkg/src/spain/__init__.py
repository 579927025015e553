"""Audio inpainting by sparse ADMM (analysis and synthesis variants) with
Janssen AR interpolation and per-frame OMP as references."""

__version__ = "0.1.0"

from .audio_io import AudioSignal, WavError, read_wav, write_wav
from .baselines import JanssenParams, janssen_frame, omp_inpaint_frame
from .evaluation import (ExperimentConfig, GapSpec, ResultRecord, apply_gaps, bootstrap_ci,
                         make_gaps, run_experiment, snr, wilcoxon_signed_rank_one_tailed)
from .frames import FrameParams, analyze, overlap_add, segment, synthesize
from .inpaint import ALGORITHMS, InpaintResult, SolverConfig, inpaint_signal
from .solvers import (FrameProblem, FrameResult, SpainParams, Variant, aspain_frame,
                      hard_threshold_pairs, omp_sparse_approx, sspain_frame)
