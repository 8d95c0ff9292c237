"""Comparison schemes with synchronised almost-blank subframes.

``static-abs-ffr`` blanks every macro in one subframe out of eight and
restricts cell-edge macro users to a reuse-3 subband group.
``dynamic-sync-abs`` picks one network-wide blanking rate from the grid
``{0, 1/8, ..., 7/8}`` by short paired pilot runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scheduler import MODE_FULL

RATE_GRID = tuple(i / 8 for i in range(8))
CYCLE = 8


@dataclass(frozen=True)
class BaselinePolicy:
    kind: str
    blanking_rate: float
    allowed: np.ndarray = None     # K x M user/subband mask
    macro_tx: np.ndarray = None    # N0 x M subbands each macro may use
    outer: np.ndarray = None       # K, cell-edge flag

    def __post_init__(self):
        if self.kind not in ("static-abs-ffr", "dynamic-sync-abs"):
            raise ValueError(f"unknown baseline {self.kind!r}")
        if not any(abs(self.blanking_rate - r) < 1e-12 for r in RATE_GRID):
            raise ValueError("blanking rate must lie on the 1/8 grid")

    def blank_subframes(self, t0: int, T: int) -> np.ndarray:
        """Subframes in which every macro blanks (fixed cycle of eight)."""
        slots = int(round(self.blanking_rate * CYCLE))
        return ((t0 + np.arange(T)) % CYCLE) < slots

    def inputs(self, t0: int, T: int, M: int, n_macro: int, n_users: int):
        """``(patterns, pat_idx, mode, allowed)`` for the scheduling kernel."""
        blank = self.blank_subframes(t0, T)
        pat = np.ones((T, M, n_macro), dtype=np.int8)
        pat[blank] = 0
        if self.macro_tx is not None:
            pat &= self.macro_tx.T[None, :, :].astype(np.int8)
        allowed = (np.ones((n_users, M), dtype=np.uint8) if self.allowed is None
                   else self.allowed.astype(np.uint8))
        return pat, np.zeros((T, M), dtype=np.int32), np.full(M, MODE_FULL, dtype=np.int8), allowed


def hex_colors(state, n_macro: int) -> np.ndarray:
    """Proper 3-colouring of the macro grid."""
    if state.macro_axial is not None:
        ax = np.asarray(state.macro_axial)
        return (ax[:, 0] - ax[:, 1]) % 3
    return np.arange(n_macro) % 3


def ffr_layout(state, graph, M: int, outer_percentile: float = 0.3,
               outer_fraction: float = 0.6):
    """Cell-edge users and subband groups for reuse-3 at the cell edge.

    The first ``M - M_out`` subbands are shared by every macro's cell-centre
    users; the remaining ``M_out`` are split into three colour groups, and a
    macro only transmits in its own group there. Pico users are unrestricted.
    Returns ``(allowed, macro_tx, outer)``.
    """
    n0, K = graph.n_macro, graph.n_users
    m_out = max(3, 3 * int(round(outer_fraction * M / 3)))
    if m_out >= M:
        raise ValueError("too few subbands for a centre band plus three edge groups")
    m_in = M - m_out
    per = m_out // 3
    colors = hex_colors(state, n0)
    group = np.full(M, -1)
    for c in range(3):
        group[m_in + c * per: m_in + (c + 1) * per] = c
    macro_tx = np.zeros((n0, M), dtype=bool)
    for n in range(n0):
        macro_tx[n] = (group == -1) | (group == colors[n])
    snr = state.snr[np.arange(K), graph.serving]
    outer = np.zeros(K, dtype=bool)
    allowed = np.ones((K, M), dtype=bool)
    for n in range(n0):
        users = np.array(graph.served(n), dtype=int)
        if not len(users):
            continue
        n_out = int(math.ceil(outer_percentile * len(users)))
        worst = users[np.argsort(snr[users], kind="stable")[:n_out]]
        outer[worst] = True
        for k in users:
            allowed[k] = group == colors[n] if outer[k] else group == -1
    return allowed, macro_tx, outer


def static_policy(state, graph, M: int, rate: float = 1 / 8, outer_percentile: float = 0.3,
                  outer_fraction: float = 0.6) -> BaselinePolicy:
    allowed, macro_tx, outer = ffr_layout(state, graph, M, outer_percentile, outer_fraction)
    return BaselinePolicy("static-abs-ffr", rate, allowed, macro_tx, outer)


def dynamic_policy(rate: float) -> BaselinePolicy:
    return BaselinePolicy("dynamic-sync-abs", rate)


def select_rate(pilot_utility) -> tuple:
    """Grid rate with the best pilot utility (lowest rate among ties)."""
    scores = [pilot_utility(r) for r in RATE_GRID]
    best = int(np.argmax(scores))
    return RATE_GRID[best], scores


def run_baseline1(scenario, state, graph, seed: int):
    from .harness import run_simulation

    return run_simulation(scenario, "baseline1", seed=seed, state=state, graph=graph)


def run_baseline2(scenario, state, graph, seed: int):
    from .harness import run_simulation

    return run_simulation(scenario, "baseline2", seed=seed, state=state, graph=graph)
