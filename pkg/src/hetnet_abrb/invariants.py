"""Named consistency checks run at super-frame boundaries in debug mode.

Enable with ``SimulationConfig.debug`` or ``HETNET_ABRB_DEBUG=1``.
"""
from __future__ import annotations

import os

import numpy as np

from .scheduler import eligible_users


class InvariantViolation(AssertionError):
    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"{name}: {detail}" if detail else name)


def debug_enabled(sim=None) -> bool:
    if sim is not None and getattr(sim, "debug", False):
        return True
    return os.environ.get("HETNET_ABRB_DEBUG", "") not in ("", "0")


def _require(ok, name, detail=""):
    if not ok:
        raise InvariantViolation(name, detail)


def check_pmf(pmf, q_a, tol: float = 1e-9) -> None:
    p = np.asarray(pmf.probs)
    sup = np.asarray(pmf.support)
    _require(np.all(p >= 0) and abs(p.sum() - 1.0) <= tol, "pmf-simplex", f"probs {p}")
    _require(len(p) <= pmf.n_macro + 1, "pmf-support-size")
    chain = sup[np.argsort(-sup.sum(axis=1), kind="stable")]
    for a, b in zip(chain, chain[1:]):
        _require(np.all(b <= a), "pmf-nested", f"{a} vs {b}")
    _require(np.allclose(pmf.marginals(), np.asarray(q_a), atol=tol, rtol=0),
             "pmf-marginals", f"blanking marginals {pmf.marginals()} for q_A {q_a}")


def check_control(ctrl, tol: float = 1e-9) -> None:
    _require(0 <= ctrl.m_a <= ctrl.M, "split-range", f"M_A = {ctrl.m_a}")
    q = np.asarray(ctrl.q_a, dtype=float)
    _require(np.all((q >= -tol) & (q <= 1 + tol)), "qa-box", f"q_A = {q}")
    check_pmf(ctrl.pmf(), q, tol)
    if ctrl.m_b:
        qb = np.asarray(ctrl.q_b, dtype=float)
        _require(len(qb) == len(ctrl.profile), "qb-profile-length")
        _require(np.all(qb >= -tol) and abs(qb.sum() - 1.0) <= tol, "qb-simplex", f"q_B = {qb}")


def check_schedule(graph, patterns, mode, allowed, chosen) -> None:
    """Every scheduled user was eligible under the pattern and subband mode."""
    T, M, N = chosen.shape
    for t in range(T):
        for m in range(M):
            for n in range(N):
                k = int(chosen[t, m, n])
                if k < 0:
                    continue
                ok = eligible_users(n, int(mode[m]), patterns[t, m], graph, allowed[:, m])
                _require(k in ok, "schedule-legal", f"t={t} m={m} bs={n} user={k}")


def check_tracker(tracker) -> None:
    R = tracker.R
    _require(np.all(np.isfinite(R)) and np.all(R >= 0), "rate-nonnegative")
