"""Super-frame scheduling kernel: compiled backend with a numpy fallback.

The compiled extension is used when importable; setting the environment
variable ``HETNET_ABRB_PURE=1`` forces the fallback. ``KERNEL_BACKEND`` names
the backend in use.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel_py

_compiled = None
if os.environ.get("HETNET_ABRB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

KERNEL_BACKEND = "cython" if _compiled is not None else "python"


def backend(name=None):
    """Kernel module by name (``cython``/``python``); default is the active one."""
    name = name or KERNEL_BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled
    if name == "python":
        return _kernel_py
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class KernelProblem:
    """Flat-array view of a topology for the scheduling kernels."""

    n_macro: int
    n_bs: int
    n_users: int
    bs_ptr: np.ndarray
    bs_users: np.ndarray
    link_ptr: np.ndarray
    link_bs: np.ndarray
    link_snr: np.ndarray
    direct_link: np.ndarray
    cat: np.ndarray
    serving: np.ndarray
    bs_mask: np.ndarray  # N x N0, B_n membership for picos

    @property
    def n_links(self) -> int:
        return len(self.link_bs)

    def in_a(self, patterns: np.ndarray) -> np.ndarray:
        """``T x M x N`` membership of each pattern in ``A_n``."""
        pats = patterns.astype(np.int64)
        macro = pats.astype(np.uint8)
        blocked = pats @ self.bs_mask[self.n_macro:].T.astype(np.int64)
        pico = (blocked == 0).astype(np.uint8)
        return np.ascontiguousarray(np.concatenate([macro, pico], axis=-1))


def build_problem(state, graph) -> KernelProblem:
    links = graph.links()
    K, N = graph.n_users, graph.n_bs
    link_ptr = np.searchsorted(links[:, 0], np.arange(K + 1)).astype(np.int32)
    link_bs = links[:, 1].astype(np.int32)
    link_snr = np.ascontiguousarray(state.snr[links[:, 0], links[:, 1]], dtype=float)
    direct = np.empty(K, dtype=np.int32)
    for k in range(K):
        seg = np.arange(link_ptr[k], link_ptr[k + 1])
        direct[k] = seg[link_bs[seg] == graph.serving[k]][0]
    order = np.lexsort((np.arange(K), graph.serving))
    bs_ptr = np.searchsorted(graph.serving[order], np.arange(N + 1)).astype(np.int32)
    mask = np.zeros((N, graph.n_macro), dtype=np.uint8)
    for n in range(graph.n_macro, N):
        mask[n, list(graph.bs_set(n))] = 1
    return KernelProblem(graph.n_macro, N, K, bs_ptr, order.astype(np.int32), link_ptr,
                         link_bs, link_snr, direct, graph.category.astype(np.int8),
                         graph.serving.astype(np.int32), mask)


@dataclass
class SuperframeResult:
    chosen: np.ndarray
    mi: np.ndarray
    rate_sum: np.ndarray


def bs_chunks(n_bs: int, workers: int) -> list:
    workers = max(1, min(workers, n_bs))
    return [np.ascontiguousarray(c, dtype=np.int32)
            for c in np.array_split(np.arange(n_bs), workers)]


def run_superframe(problem: KernelProblem, patterns, pat_idx, fading, mode, allowed,
                   w, family, tracker, workers: int = 1, name=None) -> SuperframeResult:
    """Schedule one super-frame, updating ``tracker`` in place.

    Parameters
    ----------
    patterns : (T, M, N0) int8 blanking bits per subframe and subband
    pat_idx : (T, M) profile index of each Type B pattern (ignored elsewhere)
    fading : (T, M, L) fading power per link
    mode : (M,) subband modes, see :mod:`hetnet_abrb.scheduler`
    allowed : (K, M) user/subband mask
    """
    kern = backend(name)
    T, M = patterns.shape[:2]
    patterns = np.ascontiguousarray(patterns, dtype=np.int8)
    pat_idx = np.ascontiguousarray(pat_idx, dtype=np.int32)
    in_a = problem.in_a(patterns)
    fading = np.ascontiguousarray(fading, dtype=float)
    mode = np.ascontiguousarray(mode, dtype=np.int8)
    allowed = np.ascontiguousarray(allowed, dtype=np.uint8)
    w = np.ascontiguousarray(w, dtype=float)
    chosen = np.full((T, M, problem.n_bs), -1, dtype=np.int32)
    mi = np.zeros((T, M, problem.n_bs))
    rate_sum = np.zeros(problem.n_users)

    def job(bs_list):
        kern.superframe(bs_list, problem.bs_ptr, problem.bs_users, problem.link_ptr,
                        problem.link_bs, problem.link_snr, problem.direct_link, problem.cat,
                        problem.serving, problem.n_macro, allowed, mode, patterns, pat_idx,
                        in_a, fading, w, family.code, float(family.alpha), float(family.eps),
                        tracker.R, tracker.r_prev, chosen, mi, rate_sum,
                        tracker.acc_a_sum, tracker.acc_a_cnt, tracker.acc_b_sum,
                        tracker.acc_b_cnt)

    chunks = bs_chunks(problem.n_bs, workers)
    if len(chunks) == 1:
        job(chunks[0])
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            list(pool.map(job, chunks))
    return SuperframeResult(chosen, mi, rate_sum)
