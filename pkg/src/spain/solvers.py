"""Per-frame SPAIN solvers and the sparsity/feasibility primitives they share.

Coefficients live in the full complex spectrum of length ``P``.  For a real
frame the spectrum is conjugate symmetric, so bins are handled in *groups*:
``{p, P - p}`` for ordinary bins, and the singletons ``{0}`` and ``{P/2}``
(even ``P``).  Sparsity ``k`` always counts groups.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .frames import frame_synthesis

log = logging.getLogger(__name__)


class Variant(str, Enum):
    ANALYSIS = "analysis"
    SYNTHESIS_HT = "synthesis-ht"
    SYNTHESIS_OMP = "synthesis-omp"


@dataclass(frozen=True)
class SpainParams:
    """ADMM hyperparameters.

    ``s`` groups are added to the sparsity level every ``r`` iterations;
    iteration stops once the residual norm drops to ``epsilon`` or the level
    would exceed ``max_pairs`` (``None`` means all groups).
    """

    s: int = 1
    r: int = 1
    epsilon: float = 0.1
    max_pairs: int | None = None
    variant: Variant = Variant.ANALYSIS

    def __post_init__(self):
        if self.s < 1 or self.r < 1:
            raise ValueError("s and r must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.max_pairs is not None and self.max_pairs < 1:
            raise ValueError("max_pairs must be positive")
        object.__setattr__(self, "variant", Variant(self.variant))


@dataclass(frozen=True)
class FrameProblem:
    """Observed (windowed) frame and its reliability mask (True = reliable)."""

    observed: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        observed = np.asarray(self.observed, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if observed.shape != mask.shape or observed.ndim != 1:
            raise ValueError("observed and mask must be 1-D of equal length")
        object.__setattr__(self, "observed", observed)
        object.__setattr__(self, "mask", mask)

    @property
    def length(self) -> int:
        return self.observed.shape[0]


class FrameResult(NamedTuple):
    restored: np.ndarray
    iterations: int
    converged: bool


class OMPResult(NamedTuple):
    coefficients: np.ndarray
    residual_norm: float
    rank_deficient: bool


# ---------------------------------------------------------------------------
# conjugate-pair groups
# ---------------------------------------------------------------------------

def n_groups(channels: int) -> int:
    return channels // 2 + 1


def group_partners(channels: int) -> np.ndarray:
    """Partner bin ``P - g mod P`` of each representative bin ``g``."""
    g = np.arange(n_groups(channels))
    return (channels - g) % channels


def group_energy(coeffs: np.ndarray) -> np.ndarray:
    """Energy of each group: the squared norm of all its members."""
    P = coeffs.shape[-1]
    G = n_groups(P)
    power = coeffs.real ** 2 + coeffs.imag ** 2
    energy = power[:G].copy()
    tail = power[G:][::-1]  # partners P-1, P-2, ... of groups 1, 2, ...
    energy[1:1 + tail.size] += tail
    return energy


def top_groups(energy: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest energies, ties resolved toward low indices."""
    if k >= energy.size:
        return np.arange(energy.size)
    part = np.argpartition(-energy, k - 1)[:k]
    cut = energy[part].min()
    above = np.flatnonzero(energy > cut)
    ties = np.flatnonzero(energy == cut)[:k - above.size]
    return np.concatenate([above, ties])


def keep_groups(coeffs: np.ndarray, groups: np.ndarray) -> np.ndarray:
    out = np.zeros_like(coeffs)
    groups = np.asarray(groups, dtype=int)
    partners = group_partners(coeffs.shape[-1])[groups]
    out[groups] = coeffs[groups]
    out[partners] = coeffs[partners]
    return out


def hard_threshold_pairs(coeffs: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` conjugate-pair groups of largest energy, zero the rest.

    Groups are ranked by their ℓ2 norm, which makes the result the best
    approximation of ``coeffs`` with at most ``k`` nonzero groups.  Equal
    energies are resolved in favour of the lower bin.
    """
    coeffs = np.asarray(coeffs)
    G = n_groups(coeffs.shape[-1])
    if not 0 <= k <= G:
        raise ValueError(f"k={k} outside [0, {G}]")
    if k == G:
        return coeffs.copy()
    if k == 0:
        return np.zeros_like(coeffs)
    return keep_groups(coeffs, top_groups(group_energy(coeffs), k))


# The ADMM iterates of both SPAIN variants are conjugate symmetric (real
# signals, pair-wise thresholding), so the loops work on the G = P/2 + 1
# representative bins only.  Each of them carries the weight of its group.

def _group_weights(channels: int) -> np.ndarray:
    weights = np.full(n_groups(channels), 2.0)
    weights[0] = 1.0
    if channels % 2 == 0:
        weights[-1] = 1.0
    return weights


def _half_analysis(x: np.ndarray, channels: int) -> np.ndarray:
    return np.fft.rfft(x, n=channels, norm="ortho")


def _half_synthesis(half: np.ndarray, length: int, channels: int) -> np.ndarray:
    return np.fft.irfft(half, n=channels, norm="ortho")[:length]


def _half_norm(half: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(weights @ (half.real ** 2 + half.imag ** 2)))


def _half_threshold(half: np.ndarray, k: int, weights: np.ndarray) -> np.ndarray:
    if k >= half.size:
        return half.copy()
    out = np.zeros_like(half)
    if k > 0:
        keep = top_groups(weights * (half.real ** 2 + half.imag ** 2), k)
        out[keep] = half[keep]
    return out


def project_feasible_time(x: np.ndarray, problem: FrameProblem) -> np.ndarray:
    """Euclidean projection onto the signals agreeing with the observation."""
    x = np.asarray(x, dtype=float)
    if x.shape != problem.observed.shape:
        raise ValueError("length mismatch between x and the frame problem")
    return np.where(problem.mask, problem.observed, x)


def _max_pairs(params: SpainParams, channels: int) -> int:
    G = n_groups(channels)
    if params.max_pairs is None:
        return G
    if params.max_pairs > G:
        raise ValueError(f"max_pairs={params.max_pairs} exceeds {G} groups")
    return params.max_pairs


# ---------------------------------------------------------------------------
# ADMM solvers
# ---------------------------------------------------------------------------

def aspain_frame(problem: FrameProblem, params: SpainParams = SpainParams(),
                 redundancy: int = 2) -> FrameResult:
    """Analysis SPAIN on a single frame.

    The x-update is exact because the analysis operator is a Parseval tight
    frame: ``argmin_{x in Γ} ||Ax - z + u||`` is the projection of
    ``D(z - u)`` onto Γ.
    """
    w = problem.length
    P = redundancy * w
    max_pairs = _max_pairs(params, P)
    s, r, eps = params.s, params.r, params.epsilon

    weights = _group_weights(P)
    x = problem.observed.copy()
    u = np.zeros(n_groups(P), dtype=complex)
    Ax = _half_analysis(x, P)
    k, i = s, 0
    while True:
        z = _half_threshold(Ax + u, min(k, max_pairs), weights)
        x = project_feasible_time(_half_synthesis(z - u, w, P), problem)
        Ax = _half_analysis(x, P)
        residual = Ax - z
        if _half_norm(residual, weights) <= eps:
            return FrameResult(x, i + 1, True)
        u += residual
        i += 1
        if i % r == 0:
            k += s
            if k > max_pairs:
                return FrameResult(x, i, False)


def sspain_frame(problem: FrameProblem, params: SpainParams = SpainParams(variant="synthesis-ht"),
                 redundancy: int = 2) -> FrameResult:
    """Synthesis SPAIN on a single frame (hard thresholding or OMP step 2).

    The dual variable lives in the time domain.  The sparse step is only
    approximated: by ``H_k(A(x - u))`` or by ``k`` steps of pair OMP.
    """
    if params.variant is Variant.ANALYSIS:
        raise ValueError("sspain_frame needs a synthesis variant")
    use_omp = params.variant is Variant.SYNTHESIS_OMP
    w = problem.length
    P = redundancy * w
    max_pairs = _max_pairs(params, P)
    s, r, eps = params.s, params.r, params.epsilon

    weights = _group_weights(P)
    x = project_feasible_time(problem.observed, problem)
    u = np.zeros(w)
    k, i = s, 0
    while True:
        kk = min(k, max_pairs)
        if use_omp:
            Dz = frame_synthesis(omp_sparse_approx(x - u, kk, redundancy).coefficients, w)
        else:
            Dz = _half_synthesis(_half_threshold(_half_analysis(x - u, P), kk, weights), w, P)
        x = project_feasible_time(Dz + u, problem)
        residual = Dz - x
        if np.linalg.norm(residual) <= eps:
            return FrameResult(x, i + 1, True)
        u += residual
        i += 1
        if i % r == 0:
            k += s
            if k > max_pairs:
                return FrameResult(x, i, False)


# ---------------------------------------------------------------------------
# orthogonal matching pursuit over conjugate-pair atoms
# ---------------------------------------------------------------------------

def pair_atoms(group: int, length: int, channels: int) -> np.ndarray:
    """Real atoms ``cos`` and ``sin`` of one group as columns (length x 1 or 2).

    The sine column is omitted for the singleton groups, where it vanishes.
    """
    theta = 2.0 * np.pi * group * np.arange(length) / channels
    if group == 0 or 2 * group == channels:
        return np.cos(theta)[:, None]
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


def atoms_to_coefficients(groups, weights, channels: int) -> np.ndarray:
    """Spectrum whose synthesis equals ``sum(weights[g] . pair_atoms(g))``."""
    z = np.zeros(channels, dtype=complex)
    root = np.sqrt(channels)
    for g, wts in zip(groups, weights):
        if len(wts) == 1:
            z[g] = wts[0] * root
        else:
            z[g] = 0.5 * root * (wts[0] - 1j * wts[1])
            z[channels - g] = np.conj(z[g])
    return z


class PairPursuit:
    """Orthogonal matching pursuit over conjugate-pair atoms on a support.

    Inner products between masked atoms reduce to samples of the DFT of the
    mask, so the Gram matrix of the selected atoms is grown and Cholesky
    factored without ever forming the atoms; residual correlations come from
    one FFT per step.  The least-squares fit on the selected set is thereby
    exact at every step.

    ``score`` is ``"analysis"`` (group energy of the analysis coefficients
    of the residual) or ``"projection"`` (energy of the residual projected on
    the group's truncated, renormalised atoms).
    """

    def __init__(self, target: np.ndarray, channels: int, mask: np.ndarray | None = None,
                 score: str = "analysis"):
        self.w = target.shape[0]
        self.P = channels
        self.G = n_groups(channels)
        self.mask = np.ones(self.w, dtype=bool) if mask is None else np.asarray(mask, bool)
        self.target = np.where(self.mask, target, 0.0)
        self.score = score
        self.n_support = int(self.mask.sum())
        mh = np.fft.fft(self.mask.astype(float), n=channels)
        self._C, self._S = mh.real, -mh.imag
        self.groups: list[int] = []
        self.cols: list[tuple[int, int]] = []  # (group, 0 for cos / 1 for sin)
        self.active: list[int] = []            # indices into cols kept in the factor
        self.L = np.zeros((0, 0))
        self._act_g = np.zeros(0, dtype=int)
        self._act_k = np.zeros(0, dtype=int)
        self._y = np.zeros(0)                  # L^-1 of the active correlations
        self._col_g: list[int] = []
        self._col_k: list[int] = []
        self.rank_deficient = False
        self.selected = np.zeros(self.G, dtype=bool)
        ft = np.fft.fft(self.target, n=channels)
        self._target_corr = (ft.real, -ft.imag)
        self.theta = np.zeros(0)
        self.residual = self.target.copy()
        self._fr = ft
        if score == "projection":
            g = np.arange(self.G)
            cc = 0.5 * (self.n_support + self._C[(2 * g) % channels])
            ss = 0.5 * (self.n_support - self._C[(2 * g) % channels])
            cs = 0.5 * self._S[(2 * g) % channels]
            self._gram2 = (cc, ss, cs)

    # inner products of masked real atoms
    def _gram_row(self, g: int, kind: int, hs: np.ndarray, kinds: np.ndarray) -> np.ndarray:
        """``<atom(hs[j], kinds[j]), atom(g, kind)>`` on the support, for all j."""
        P = self.P
        dm, dp, dn = (hs - g) % P, (hs + g) % P, (g - hs) % P
        C, S = self._C, self._S
        if kind == 0:
            return np.where(kinds == 0, 0.5 * (C[dm] + C[dp]), 0.5 * (S[dp] + S[dm]))
        return np.where(kinds == 0, 0.5 * (S[dp] + S[dn]), 0.5 * (C[dm] - C[dp]))

    def _gram(self, a: tuple[int, int], b: tuple[int, int]) -> float:
        (g, ka), (h, kb) = a, b
        return float(self._gram_row(h, kb, np.array([g]), np.array([ka]))[0])

    def scores(self) -> np.ndarray:
        fr = self._fr[:self.G]
        a, b = fr.real, -fr.imag
        if self.score == "analysis":
            energy = np.abs(fr) ** 2
            pair = group_partners(self.P) != np.arange(self.G)
            energy[pair] *= 2.0
        else:
            cc, ss, cs = self._gram2
            det = cc * ss - cs ** 2
            scale = (cc + ss) ** 2
            ok = det > 1e-12 * np.maximum(scale, 1e-300)
            energy = np.zeros(self.G)
            energy[ok] = (ss[ok] * a[ok] ** 2 - 2 * cs[ok] * a[ok] * b[ok]
                          + cc[ok] * b[ok] ** 2) / det[ok]
            single = ~ok & (cc > 1e-12 * self.n_support)
            energy[single] = a[single] ** 2 / cc[single]
        energy = energy.astype(float)
        energy[self.selected] = -1.0
        return energy

    def step(self) -> int:
        g = int(np.argmax(self.scores()))
        self.add(g)
        return g

    def add(self, g: int):
        self.selected[g] = True
        self.groups.append(g)
        kinds = (0,) if g == 0 or 2 * g == self.P else (0, 1)
        n0 = len(self.active)
        if n0:
            rows = np.stack([self._gram_row(g, kind, self._act_g[:n0], self._act_k[:n0])
                             for kind in kinds], axis=1)
            base = solve_triangular(self.L[:n0, :n0], rows, lower=True, check_finite=False)
        else:
            base = np.zeros((0, len(kinds)))
        for j, kind in enumerate(kinds):
            self.cols.append((g, kind))
            self._col_g.append(g)
            self._col_k.append(kind)
            diag = float(self._gram_row(g, kind, np.array([g]), np.array([kind]))[0])
            if diag <= 1e-12 * max(self.n_support, 1):
                self.rank_deficient = True
                continue
            n = len(self.active)
            ell = base[:, j]
            if n > n0:
                # the cosine column of this group was just appended
                cross = self._gram_row(g, kind, self._act_g[n0:n], self._act_k[n0:n])
                ell = np.append(ell, (cross - self.L[n0:n, :n0] @ ell) / np.diag(self.L)[n0:n])
            d = diag - ell @ ell
            if d <= 1e-10 * diag:
                self.rank_deficient = True
                continue
            self._grow(n + 1)
            self.L[n, :n] = ell
            self.L[n, n] = np.sqrt(d)
            self._act_g[n], self._act_k[n] = g, kind
            self._y = np.append(self._y, (self._target_corr[kind][g] - ell @ self._y) / self.L[n, n])
            self.active.append(len(self.cols) - 1)
        self._refit()

    def _grow(self, n: int):
        if n <= self._act_g.size:
            return
        cap = max(2 * self._act_g.size, 16)
        L = np.zeros((cap, cap))
        m = self._act_g.size
        L[:m, :m] = self.L
        self.L = L
        self._act_g = np.concatenate([self._act_g, np.zeros(cap - m, dtype=int)])
        self._act_k = np.concatenate([self._act_k, np.zeros(cap - m, dtype=int)])

    def _corr(self, col: tuple[int, int]) -> float:
        g, kind = col
        return self._target_corr[kind][g]

    def _refit(self):
        n = len(self.active)
        if n:
            self.theta = solve_triangular(self.L[:n, :n], self._y, lower=True, trans="T",
                                          check_finite=False)
        else:
            self.theta = np.zeros(0)
        self.residual = self.target - self.mask * self.fitted()
        self._fr = np.fft.fft(self.residual, n=self.P)

    def weights(self) -> list[np.ndarray]:
        """Per-group weights of the ``cos``/``sin`` atoms in the current fit."""
        full = np.zeros(len(self.cols))
        full[self.active] = self.theta
        out, pos = [], 0
        for g in self.groups:
            n = 1 if g == 0 or 2 * g == self.P else 2
            out.append(full[pos:pos + n])
            pos += n
        return out

    def coefficients(self) -> np.ndarray:
        z = np.zeros(self.P, dtype=complex)
        if not self.cols:
            return z
        g, kind = np.array(self._col_g), np.array(self._col_k)
        full = np.zeros(g.size)
        full[self.active] = self.theta
        single = (g == 0) | (2 * g == self.P)
        root = np.sqrt(self.P)
        # cos weight a and sin weight b of a pair map to 0.5 sqrt(P) (a - ib)
        scale = np.where(single, root, 0.5 * root)
        np.add.at(z, g, np.where(kind == 0, scale * full, -1j * scale * full))
        pair = g[~single]
        z[self.P - pair] = np.conj(z[pair])
        return z

    def fitted(self) -> np.ndarray:
        return frame_synthesis(self.coefficients(), self.w)

    def finalize(self):
        """Replace the fit by the minimum-norm least-squares solution if the
        selected atoms turned out linearly dependent on the support."""
        if not self.rank_deficient or not self.groups:
            return
        phi = np.concatenate([pair_atoms(g, self.w, self.P) for g in self.groups], axis=1)
        phi = phi * self.mask[:, None]
        theta = np.linalg.lstsq(phi, self.target, rcond=None)[0]
        self.active = list(range(len(self.cols)))
        self.theta = theta
        self.residual = self.target - self.mask * self.fitted()


def omp_sparse_approx(target: np.ndarray, k: int, redundancy: int = 2) -> OMPResult:
    """``k``-group sparse approximation of ``target`` in the synthesis frame.

    Each step selects the unselected group whose analysis coefficients of the
    current residual carry the most energy, then refits the target on all
    selected groups by least squares.
    """
    target = np.asarray(target, dtype=float)
    P = redundancy * target.shape[0]
    G = n_groups(P)
    if not 1 <= k <= G:
        raise ValueError(f"k={k} outside [1, {G}]")
    pursuit = PairPursuit(target, P, score="analysis")
    for _ in range(k):
        pursuit.step()
    pursuit.finalize()
    return OMPResult(pursuit.coefficients(), float(np.linalg.norm(pursuit.residual)),
                     pursuit.rank_deficient)
