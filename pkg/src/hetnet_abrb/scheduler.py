"""Per-subframe eligibility, mutual information, weighted-argmax scheduling and
online rate / conditional-MI estimation.

These are the readable per-decision reference functions. Whole super-frames
are run by :mod:`hetnet_abrb.kernel`, which implements the same rules on
flat arrays and is tested against this module.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .netmodel import MACRO_I, MACRO_N, PICO_I

# subband modes
MODE_A = 0     # Type A subband of the proposed scheme
MODE_B = 1     # Type B subband: only macro I-users, picos silent
MODE_FULL = 2  # baselines: no Type A / Type B split


def eligible_users(n: int, mode: int, pattern, graph, allowed=None) -> tuple:
    """Users BS ``n`` may schedule on a subband of the given mode.

    ``allowed`` optionally masks users out (frequency reuse restrictions).
    """
    n0 = graph.n_macro
    if n < n0 and pattern[n] == 0:
        return ()
    if mode == MODE_B and n >= n0:
        return ()
    out = []
    for k in graph.served(n):
        if allowed is not None and not allowed[k]:
            continue
        cat = graph.category[k]
        if mode == MODE_B:
            if cat != MACRO_I:
                continue
        elif mode == MODE_A:
            if cat == MACRO_I:
                continue
            if cat == PICO_I and any(pattern[j] for j in graph.macro_neighbors(k)):
                continue
        out.append(k)
    return tuple(out)


def mutual_information(k: int, pattern, gain_sq, state, graph, mode: int) -> float:
    """log2(1 + S / (noise + interference)) with interference as noise.

    ``gain_sq`` is the K x N matrix of instantaneous ``|h|^2`` (large-scale
    included); ``state`` supplies powers and noise.
    """
    b = graph.serving[k]
    p = state.power_mw
    omega = state.noise_mw
    for n in graph.macro_neighbors(k):
        if pattern[n]:
            omega += gain_sq[k, n] * p[n]
    if mode != MODE_B:
        for n in graph.pico_neighbors(k):
            omega += gain_sq[k, n] * p[n]
    return float(np.log2(1.0 + gain_sq[k, b] * p[b] / omega))


def schedule(n: int, mode: int, pattern, gain_sq, mu, state, graph, allowed=None):
    """Weighted argmax over eligible users; ``None`` when nobody is eligible."""
    best, best_score = None, -np.inf
    for k in eligible_users(n, mode, pattern, graph, allowed):
        s = mu[k] * mutual_information(k, pattern, gain_sq, state, graph, mode)
        if s > best_score:
            best, best_score = k, s
    return best


@dataclass
class RateTracker:
    """Moving-average rates plus conditional MI accumulators.

    ``acc_a[k, 0]`` collects samples while the pattern lies in ``A_{b_k}``,
    ``acc_a[k, 1]`` while it lies in the complement.
    """

    n_users: int
    n_profile: int = 1
    eps: float = 1e-6
    R: np.ndarray = field(init=False)
    r_prev: np.ndarray = field(init=False)
    acc_a_sum: np.ndarray = field(init=False)
    acc_a_cnt: np.ndarray = field(init=False)
    acc_b_sum: np.ndarray = field(init=False)
    acc_b_cnt: np.ndarray = field(init=False)

    def __post_init__(self):
        self.R = np.zeros(self.n_users)
        self.r_prev = np.zeros(self.n_users)
        self.reset_estimates(self.n_profile)

    def reset_estimates(self, n_profile: int) -> None:
        self.n_profile = n_profile
        self.acc_a_sum = np.zeros((self.n_users, 2))
        self.acc_a_cnt = np.zeros((self.n_users, 2), dtype=np.int64)
        self.acc_b_sum = np.zeros((self.n_users, max(n_profile, 1)))
        self.acc_b_cnt = np.zeros((self.n_users, max(n_profile, 1)), dtype=np.int64)

    def update_rate(self, tau: int, r_prev=None) -> np.ndarray:
        """Advance the average to subframe ``tau`` of the current super-frame."""
        r = self.r_prev if r_prev is None else np.asarray(r_prev, dtype=float)
        self.R = (tau + 1.0) / (tau + 2.0) * self.R + r / (tau + 2.0)
        return self.R

    def weights(self, family, w) -> np.ndarray:
        return np.asarray(w) * family.du(np.maximum(self.R, self.eps))

    def observe_a(self, k: int, in_a: bool, mi: float) -> None:
        c = 0 if in_a else 1
        self.acc_a_sum[k, c] += mi
        self.acc_a_cnt[k, c] += 1

    def observe_b(self, k: int, j: int, mi: float) -> None:
        self.acc_b_sum[k, j] += mi
        self.acc_b_cnt[k, j] += 1


def _means(total, count):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def estimates_a(tracker: RateTracker, graph, previous=None):
    """``(e, e_bar)`` from the Type A accumulators.

    Structural zeros are filled in (macro N-users get nothing while their BS
    blanks, pico I-users get nothing while a neighbour macro transmits).
    Classes never visited fall back to ``previous`` and otherwise to zero.
    """
    m = _means(tracker.acc_a_sum, tracker.acc_a_cnt)
    e, eb = m[:, 0].copy(), m[:, 1].copy()
    cat = graph.category
    eb[(cat == MACRO_N) | (cat == PICO_I)] = 0.0
    # a pico with no interfering macros never leaves A_n
    for n in range(graph.n_macro, graph.n_bs):
        if not graph.bs_set(n):
            eb[graph.serving == n] = 0.0
    ua = np.array(graph.users_a, dtype=int)
    missing = ua[np.isnan(e[ua]) | np.isnan(eb[ua])]
    if previous is not None:
        pe, peb = previous
        e = np.where(np.isnan(e), pe, e)
        eb = np.where(np.isnan(eb), peb, eb)
    if np.isnan(e[ua]).any() or np.isnan(eb[ua]).any():
        warnings.warn(f"{len(missing)} Type A users lack a pattern-class estimate; using 0",
                      RuntimeWarning, stacklevel=2)
    return np.nan_to_num(e), np.nan_to_num(eb)


def estimates_b(tracker: RateTracker, graph, profile, previous=None) -> np.ndarray:
    """``|U_B| x J`` estimate matrix; zero where the user's macro is off."""
    ub = np.array(graph.users_b, dtype=int)
    J = len(profile)
    est = _means(tracker.acc_b_sum[ub, :J], tracker.acc_b_cnt[ub, :J])
    for j, a in enumerate(profile.patterns):
        off = np.array([a[graph.serving[k]] == 0 for k in ub], dtype=bool)
        est[off, j] = 0.0
    if previous is not None and previous.shape == est.shape:
        est = np.where(np.isnan(est), previous, est)
    if np.isnan(est).any():
        warnings.warn("Type B pattern estimate missing; using 0", RuntimeWarning, stacklevel=2)
    return np.nan_to_num(est)
