"""Type B profile search over independent sets, and pattern-weight optimisation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abrb import AbrbProfile, macro_footprint, profile_from_mis
from .graph_b import (MIS_CAP, GraphTooLarge, enumerate_mis, max_weight_independent_set,
                      mi_vector_deterministic)
from .simplex import maximize_on_simplex


def _mi_matrix(theta, state, graph, ig) -> np.ndarray:
    return np.column_stack([mi_vector_deterministic(v, state, graph, ig) for v in theta])


def solve_qcheck(theta, state, graph, ig, weights, family, q0=None, tol: float = 1e-9):
    """Best mixture of the independent sets in ``theta`` under high-SNR rates.

    ``weights`` is indexed by user id. Returns ``(q, value)``.
    """
    if not theta:
        raise ValueError("empty set family")
    A = _mi_matrix(theta, state, graph, ig)
    w = np.asarray(weights, dtype=float)[list(ig.users)]
    res = maximize_on_simplex(A, w, family, q0=q0, tol=tol)
    return res.q, res.value


def solve_qb(profile: AbrbProfile, estimates, weights_b, family, q0=None, tol: float = 1e-9):
    """Pattern probabilities for a profile given per-user, per-pattern rates.

    ``estimates`` is ``|U_B| x J`` and ``weights_b`` follows its rows.
    """
    est = np.asarray(estimates, dtype=float)
    if est.shape[1] != len(profile):
        raise ValueError("estimate matrix does not match the profile")
    if len(profile) == 1:
        return np.ones(1), float(np.sum(np.asarray(weights_b) * family.u(est[:, 0])))
    res = maximize_on_simplex(est, weights_b, family, q0=q0, tol=tol)
    return res.q, res.value


def greedy_cover(ig, cap: int = MIS_CAP) -> list:
    """Maximal independent sets covering every vertex, largest gain first."""
    uncovered = set(ig.users)
    cover = []
    try:
        family_ = enumerate_mis(ig, cap)
    except GraphTooLarge:
        family_ = None
    while uncovered:
        if family_ is not None:
            best = max(family_, key=lambda s: (len(uncovered.intersection(s)), [-k for k in s]))
        else:
            w = np.array([1.0 if k in uncovered else 0.0 for k in ig.users])
            best = max_weight_independent_set(ig, w, cap=-1).vertices
        cover.append(tuple(best))
        uncovered -= set(best)
    return cover


@dataclass
class B2Result:
    theta: list
    q: np.ndarray
    value: float
    history: list = field(default_factory=list)
    sizes: list = field(default_factory=list)
    profile: AbrbProfile = None
    q_profile: np.ndarray = None
    exact: bool = True


def profile_weights(theta, q, graph) -> tuple:
    """Profile of the positive-mass sets with their merged probabilities."""
    prof = profile_from_mis(theta, graph)
    qp = np.zeros(len(prof))
    for v, qv in zip(theta, q):
        on = macro_footprint(v, graph)
        a = tuple(1 if n in on else 0 for n in range(graph.n_macro))
        qp[prof.patterns.index(a)] += qv
    return prof, qp / qp.sum()


def algorithm_b2(graph, ig, state, weights, family, eps: float = 1e-6,
                 max_iter: int = 50, cap: int = MIS_CAP) -> B2Result:
    """Grow a set family by max-weight independent sets until the high-SNR
    utility stops improving."""
    if ig.n == 0:
        return B2Result([], np.zeros(0), 0.0, profile=AbrbProfile(()), q_profile=np.zeros(0))
    w = np.asarray(weights, dtype=float)
    wb = w[list(ig.users)]
    gains = np.log2(1.0 + np.array([state.snr[k, graph.serving[k]] for k in ig.users]))
    theta = greedy_cover(ig, cap)
    q, val = solve_qcheck(theta, state, graph, ig, w, family)
    hist, sizes = [val], [len(theta)]
    exact = True
    for _ in range(max_iter):
        keep = [i for i in range(len(theta)) if q[i] > 0]
        theta, q = [theta[i] for i in keep], q[keep]
        x = _mi_matrix(theta, state, graph, ig) @ q
        mu = wb * family.du(x)
        mw = max_weight_independent_set(ig, mu * gains, cap)
        exact &= mw.exact
        if mw.vertices in theta:
            break
        cand = theta + [mw.vertices]
        q_new, v_new = solve_qcheck(cand, state, graph, ig, w, family, q0=np.append(q, 0.0))
        sizes.append(len(cand))
        if v_new < val:
            # numerical guard: the warm start already attains ``val``
            q_new, v_new = np.append(q, 0.0), val
        theta, q = cand, q_new
        improved = v_new - val
        val = v_new
        hist.append(val)
        if improved <= eps:
            break
    keep = [i for i in range(len(theta)) if q[i] > 0]
    theta, q = [theta[i] for i in keep], q[keep] / q[keep].sum()
    prof, qp = profile_weights(theta, q, graph)
    return B2Result(theta, q, val, hist, sizes, prof, qp, exact)
