"""ABRB patterns, synchronous pattern distributions and Type B profiles.

A pattern is a tuple of 0/1 ints, one per macro BS; ``0`` means the macro
sends a blank resource block on that subband, ``1`` means it sends data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Pattern = tuple


def to_bits(pattern: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in pattern)


def from_bits(text: str) -> Pattern:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bit-string: {text!r}")
    return tuple(int(c) for c in text)


@dataclass(frozen=True)
class SynchronousAbrbPmf:
    support: tuple
    probs: np.ndarray

    @property
    def n_macro(self) -> int:
        return len(self.support[0])

    def marginals(self) -> np.ndarray:
        """Blanking probability of each macro."""
        pats = np.array(self.support, dtype=int)
        return ((pats == 0) * self.probs[:, None]).sum(axis=0)

    def as_pairs(self) -> list:
        return [(to_bits(a), float(p)) for a, p in zip(self.support, self.probs)]

    def sample_index(self, u) -> np.ndarray:
        """Map uniforms in [0, 1) to support indices by inverse CDF."""
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, u, side="right")


def synchronous_pmf(q_a) -> SynchronousAbrbPmf:
    """Nested-blanking distribution with prescribed per-macro blanking rates.

    The ``j``-th chain element blanks the ``j`` macros with the largest rates;
    its probability is the gap between consecutive sorted rates, which is the
    only assignment that reproduces every marginal.
    """
    q = np.asarray(q_a, dtype=float)
    if q.ndim != 1 or len(q) == 0:
        raise ValueError("q_A must be a nonempty vector")
    if np.any(q < 0) or np.any(q > 1) or not np.all(np.isfinite(q)):
        raise ValueError("q_A entries must lie in [0, 1]")
    n0 = len(q)
    order = np.argsort(q, kind="stable")  # ascending, ties by index
    qs = q[order]
    support, probs = [], []
    # j = number of blanked macros (the j largest); gaps of the sorted rates
    edges = np.concatenate([[0.0], qs, [1.0]])
    for j in range(n0 + 1):
        p = edges[n0 - j + 1] - edges[n0 - j]
        if p <= 0.0:
            continue
        bits = np.ones(n0, dtype=int)
        bits[order[n0 - j:]] = 0
        support.append(tuple(int(b) for b in bits))
        probs.append(p)
    return SynchronousAbrbPmf(tuple(support), np.array(probs))


def sample_pattern(pmf: SynchronousAbrbPmf, rng) -> Pattern:
    return pmf.support[int(pmf.sample_index(rng.random()))]


def in_pattern_set(pattern: Sequence[int], n: int, graph) -> bool:
    """Whether ``pattern`` lies in ``A_n``.

    For a macro this means it sends data; for a pico it means every macro in
    its interfering set blanks.
    """
    if not 0 <= n < graph.n_bs:
        raise KeyError(f"unknown BS index {n}")
    if n < graph.n_macro:
        return pattern[n] == 1
    return all(pattern[j] == 0 for j in graph.bs_set(n))


def pattern_set(n: int, graph) -> list:
    """Enumerate ``A_n`` over all ``2**N0`` patterns (small ``N0`` only)."""
    n0 = graph.n_macro
    out = []
    for code in range(2 ** n0):
        a = tuple((code >> (n0 - 1 - i)) & 1 for i in range(n0))
        if in_pattern_set(a, n, graph):
            out.append(a)
    return out


@dataclass(frozen=True)
class AbrbProfile:
    patterns: tuple

    def __post_init__(self):
        if len(set(self.patterns)) != len(self.patterns):
            raise ValueError("profile patterns must be distinct")

    def __len__(self):
        return len(self.patterns)

    def bits(self) -> list:
        return [to_bits(a) for a in self.patterns]


@dataclass(frozen=True)
class ProfilePmf:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if np.any(q < -1e-12) or abs(q.sum() - 1.0) > 1e-9:
            raise ValueError("profile pmf must lie on the simplex")

    def sample_index(self, u) -> np.ndarray:
        cdf = np.cumsum(self.q)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, u, side="right")


def macro_footprint(vertex_set: Iterable[int], graph) -> frozenset:
    """Macros serving at least one user of the set."""
    ub = set(graph.users_b)
    out = set()
    for k in vertex_set:
        if k not in ub:
            raise KeyError(f"user {k} is not a macro I-user")
        out.add(int(graph.serving[k]))
    return frozenset(out)


def profile_from_mis(mis_list, graph) -> AbrbProfile:
    patterns = []
    for v in mis_list:
        on = macro_footprint(v, graph)
        a = tuple(1 if n in on else 0 for n in range(graph.n_macro))
        if a not in patterns:
            patterns.append(a)
    if len(patterns) > max(1, len(graph.users_b)):
        raise ValueError("profile larger than the number of macro I-users")
    return AbrbProfile(tuple(patterns))
