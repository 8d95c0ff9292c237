"""Concave utility maximisation over the probability simplex.

Solves ``max_q sum_k w_k u((A q)_k)`` subject to ``q >= 0, sum q = 1`` with
pairwise Frank-Wolfe steps and an exact line search. Used for Type B pattern
weights and for the frozen-sample scheduling step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


class DegenerateObjective(ValueError):
    """All columns are zero and the utility has no finite value at zero rate."""


@dataclass
class SimplexResult:
    q: np.ndarray
    value: float
    gap: float
    iterations: int


def objective(A, w, family, q) -> float:
    return float(np.sum(w * family.u(A @ q)))


def gradient(A, w, family, q) -> np.ndarray:
    return A.T @ (w * family.du(A @ q))


def kkt_gap(A, w, family, q, support_tol: float = 0.0) -> float:
    """``max_j g_j - min_{q_j > tol} g_j``; zero exactly at a simplex KKT point."""
    g = gradient(A, w, family, q)
    supp = q > support_tol
    return float(g.max() - g[supp].min())


def _line_search(x, delta, w, family, gmax: float) -> float:
    nz = delta != 0
    x, delta, w = x[nz], delta[nz], w[nz]

    def slope(gam):
        return float(np.sum(w * family.du(x + gam * delta) * delta))

    if slope(gmax) >= 0:
        return gmax
    if slope(0.0) <= 0:
        return 0.0
    return brentq(slope, 0.0, gmax, xtol=1e-15 * max(1.0, gmax), rtol=4 * np.finfo(float).eps)


def _merge_duplicates(A):
    """Index of the first identical column for each column."""
    J = A.shape[1]
    rep = np.arange(J)
    seen = {}
    for j in range(J):
        key = A[:, j].tobytes()
        rep[j] = seen.setdefault(key, j)
    return rep


def sparsify(A, q, tol: float = 1e-15, rank_tol: float = 1e-8) -> np.ndarray:
    """Shrink the support along directions that keep ``A q`` and ``sum q``
    fixed, until the support columns are affinely independent."""
    q = q.copy()
    while True:
        supp = np.flatnonzero(q > tol)
        if len(supp) <= 1:
            return q
        B = np.vstack([A[:, supp], np.ones(len(supp))])
        _, s, vt = np.linalg.svd(B)
        rank = int(np.sum(s > rank_tol * s[0]))
        if len(supp) <= rank:
            return q
        v = vt[-1]
        if not np.any(v < 0):
            v = -v
        neg = np.flatnonzero(v < 0)
        ratios = q[supp[neg]] / -v[neg]
        i = int(np.argmin(ratios))
        q[supp] += ratios[i] * v
        q[supp[neg[i]]] = 0.0
        q = np.maximum(q, 0.0)
        q[q < tol] = 0.0
        q /= q.sum()


def maximize_on_simplex(A, w, family, q0=None, tol: float = 1e-9,
                        max_iter: int = 200000, sparse: bool = True) -> SimplexResult:
    """Pairwise Frank-Wolfe with exact line search.

    Parameters
    ----------
    A : (K, J) nonnegative per-user value of each vertex
    w : (K,) user weights
    q0 : optional warm start on the simplex

    The objective never decreases between iterations. Identical columns are
    merged onto their first occurrence.
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    K, J = A.shape
    if J == 0:
        raise ValueError("no vertices")
    if not np.all(np.isfinite(A)) or np.any(A < 0):
        raise ValueError("value matrix must be finite and nonnegative")
    if family.kind != "sum" and not np.any(A[w > 0] > 0):
        raise DegenerateObjective("every vertex gives zero rate to every weighted user")
    rep = _merge_duplicates(A)
    if q0 is None:
        q = np.zeros(J)
        q[np.unique(rep)] = 1.0
        q /= q.sum()
    else:
        q = np.zeros(J)
        np.add.at(q, rep, np.asarray(q0, dtype=float))
        q = np.maximum(q, 0.0)
        q /= q.sum()
    active = np.zeros(J, dtype=bool)
    active[np.unique(rep)] = True
    it = 0
    gap = np.inf
    while it < max_iter:
        x = A @ q
        g = A.T @ (w * family.du(x))
        g_act = np.where(active, g, -np.inf)
        jp = int(np.argmax(g_act))
        supp = q > 0
        jm = int(np.flatnonzero(supp)[np.argmin(g[supp])])
        gap = float(g[jp] - g[jm])
        if gap <= tol or jp == jm:
            break
        gam = _line_search(x, A[:, jp] - A[:, jm], w, family, q[jm])
        if gam <= 0.0:
            break
        if gam >= q[jm]:
            q[jp] += q[jm]
            q[jm] = 0.0
        else:
            q[jp] += gam
            q[jm] -= gam
        it += 1
    q = np.maximum(q, 0.0)
    q /= q.sum()
    if sparse and np.count_nonzero(q) > 1:
        before = objective(A, w, family, q)
        qs = sparsify(A, q)
        if objective(A, w, family, qs) >= before - 1e-9 * max(1.0, abs(before)):
            res = maximize_on_simplex(A, w, family, qs, tol, max_iter, sparse=False)
            if res.value >= before - 1e-9 * max(1.0, abs(before)):
                res.iterations += it
                return res
    return SimplexResult(q, objective(A, w, family, q), kkt_gap(A, w, family, q), it)
