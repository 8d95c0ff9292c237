"""Utility families with the scaling decomposition, and subband partitioning."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("pf", "alpha", "sum")


@dataclass(frozen=True)
class UtilityFamily:
    """``u`` is log for ``pf``, ``r**(1-alpha)/(1-alpha)`` for ``alpha`` and the
    identity for ``sum``. Below ``eps`` the non-linear families continue
    along their tangent line, so values stay finite and concave at zero rate."""

    kind: str = "pf"
    alpha: float = 1.0
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind == "alpha" and not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def is_log(self) -> bool:
        return self.kind == "pf" or (self.kind == "alpha" and self.alpha == 1.0)

    @property
    def code(self) -> int:
        """Integer tag understood by the scheduling kernels."""
        if self.is_log:
            return 0
        return 1 if self.kind == "alpha" else 2

    def _raw_u(self, r):
        if self.is_log:
            return np.log(r)
        return r ** (1.0 - self.alpha) / (1.0 - self.alpha)

    def _raw_du(self, r):
        return 1.0 / r if self.is_log else r ** (-self.alpha)

    def u(self, r):
        """Utility; below ``eps`` the tangent line at ``eps`` keeps it concave."""
        r = np.asarray(r, dtype=float)
        if self.kind == "sum":
            return r
        rf = np.maximum(r, self.eps)
        lin = self._raw_u(self.eps) + self._raw_du(self.eps) * (r - self.eps)
        return np.where(r >= self.eps, self._raw_u(rf), lin)

    def du(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "sum":
            return np.ones_like(r)
        return self._raw_du(np.maximum(r, self.eps))

    def f(self, c):
        if self.is_log:
            return np.ones_like(np.asarray(c, dtype=float))
        if self.kind == "alpha":
            return np.asarray(c, dtype=float) ** (1.0 - self.alpha)
        return np.asarray(c, dtype=float)

    def g(self, c):
        if self.is_log:
            return np.log(c)
        return np.zeros_like(np.asarray(c, dtype=float))

    def df(self, c):
        c = np.asarray(c, dtype=float)
        if self.is_log:
            return np.zeros_like(c)
        if self.kind == "alpha":
            return (1.0 - self.alpha) * c ** (-self.alpha)
        return np.ones_like(c)

    def dg(self, c):
        c = np.asarray(c, dtype=float)
        return 1.0 / c if self.is_log else np.zeros_like(c)


def utility_value(family: UtilityFamily, rates, weights=None) -> float:
    r = np.asarray(rates, dtype=float)
    if np.any(r < 0):
        raise ValueError("rates must be nonnegative")
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * family.u(r)))


def scaling_pair(family: UtilityFamily):
    """``(f, g)`` with ``u(c r) = f(c) u(r) + g(c)``."""
    return family.f, family.g


def split_objective(q_s, ua, ub, family: UtilityFamily, M, wa, wb):
    """Network utility of a Type A / Type B split at fraction ``q_s``."""
    ca, cb = M * q_s, M * (1.0 - q_s)
    return (family.f(ca) * ua + family.g(cb) * wb
            + family.f(cb) * ub + family.g(ca) * wa)


def _split_slope(q_s, ua, ub, family, M, wa, wb):
    ca, cb = M * q_s, M * (1.0 - q_s)
    return M * (family.df(ca) * ua - family.dg(cb) * wb
                - family.df(cb) * ub + family.dg(ca) * wa)


def solve_qs(ua, ub, family: UtilityFamily, M: int, wa: float, wb: float,
             a_empty=None, b_empty=None, tol: float = 1e-12):
    """Best split of ``M`` subbands between Type A and Type B.

    Returns ``(q_s, M_A)`` with ``q_s = M_A / M``. The continuous optimum is
    located by bisection on the slope of the (concave) split objective and
    the better of its two neighbouring integer splits is returned.
    """
    a_empty = (wa == 0) if a_empty is None else a_empty
    b_empty = (wb == 0) if b_empty is None else b_empty
    if a_empty and b_empty:
        raise ValueError("both user sets are empty")
    if M < 2:
        raise ValueError("M must be >= 2")
    if b_empty:
        return 1.0, M
    if a_empty:
        return 0.0, 0
    lo, hi = 1.0 / M, 1.0 - 1.0 / M
    args = (ua, ub, family, M, wa, wb)
    if _split_slope(lo, *args) <= 0:
        qc = lo
    elif _split_slope(hi, *args) >= 0:
        qc = hi
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _split_slope(mid, *args) > 0:
                lo = mid
            else:
                hi = mid
        qc = 0.5 * (lo + hi)
    cands = sorted({min(max(math.floor(qc * M), 1), M - 1),
                    min(max(math.ceil(qc * M), 1), M - 1)})
    vals = [float(split_objective(c / M, *args)) for c in cands]
    best = cands[int(np.argmax(vals))]
    return best / M, best
