"""Blanking-rate optimisation for Type A subbands.

The average per-subband rate of a Type A user is affine in the probability
that its serving BS sees a favourable pattern class:

* macro N-user:  ``(1 - q_b) e``
* pico N-user:   ``z_b (e - e_bar) + e_bar``
* pico I-user:   ``z_b e``

with ``z_n = min_{j in B_n} q_j`` (``1`` when ``B_n`` is empty). The network
objective ``sum_k w_k u(I_k(q))`` is maximised over the unit box.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from .netmodel import MACRO_I, MACRO_N, PICO_I, PICO_N


@dataclass(frozen=True)
class EstimateSetA:
    """Conditional average rates ``e`` (favourable class) and ``e_bar``."""

    graph: object
    e: np.ndarray
    e_bar: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        eb = np.asarray(self.e_bar, dtype=float)
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(eb))):
            raise ValueError("non-finite Type A estimates")
        if np.any(e < 0) or np.any(eb < 0):
            raise ValueError("estimates must be nonnegative")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "e_bar", eb)


@dataclass
class _Layout:
    n0: int
    users: np.ndarray        # Type A users in evaluation order
    w: np.ndarray
    macro_idx: np.ndarray    # positions of macro N-users in ``users``
    macro_bs: np.ndarray
    pico_idx: np.ndarray
    pico_cell: np.ndarray    # row of the user's cell in ``cell_mask``
    slope: np.ndarray        # coefficient of z
    offset: np.ndarray
    e_macro: np.ndarray
    cell_mask: np.ndarray    # P x N0
    cell_empty: np.ndarray


def _layout(est: EstimateSetA, weights) -> _Layout:
    g = est.graph
    w_all = np.asarray(weights, dtype=float)
    users = np.array(g.users_a, dtype=int)
    cat = g.category[users]
    if np.any(cat == MACRO_I):
        raise ValueError("macro I-users are not Type A")
    picos = list(range(g.n_macro, g.n_bs))
    cell_row = {n: i for i, n in enumerate(picos)}
    mask = np.zeros((len(picos), g.n_macro), dtype=bool)
    for n in picos:
        mask[cell_row[n], list(g.bs_set(n))] = True
    macro_idx = np.flatnonzero(cat == MACRO_N)
    pico_idx = np.flatnonzero((cat == PICO_N) | (cat == PICO_I))
    pu = users[pico_idx]
    e, eb = est.e[pu], est.e_bar[pu]
    is_pi = g.category[pu] == PICO_I
    slope = np.where(is_pi, e, e - eb)
    offset = np.where(is_pi, 0.0, eb)
    return _Layout(g.n_macro, users, w_all[users], macro_idx, g.serving[users[macro_idx]],
                   pico_idx, np.array([cell_row[n] for n in g.serving[pu]], dtype=int),
                   slope, offset, est.e[users[macro_idx]], mask, ~mask.any(axis=1))


def _cell_min(lay: _Layout, q) -> np.ndarray:
    if len(lay.cell_mask) == 0:
        return np.zeros(0)
    z = np.where(lay.cell_mask, q[None, :], np.inf).min(axis=1)
    return np.where(lay.cell_empty, 1.0, z)


def _rates(lay: _Layout, q) -> np.ndarray:
    r = np.empty(len(lay.users))
    r[lay.macro_idx] = (1.0 - q[lay.macro_bs]) * lay.e_macro
    z = _cell_min(lay, q)
    r[lay.pico_idx] = z[lay.pico_cell] * lay.slope + lay.offset
    return np.maximum(r, 0.0)


def ibar_a_closed_form(q_a, est: EstimateSetA, k: int) -> float:
    g = est.graph
    q = np.asarray(q_a, dtype=float)
    cat = g.category[k]
    b = g.serving[k]
    e, eb = est.e[k], est.e_bar[k]
    if cat == MACRO_N:
        return float((1.0 - q[b]) * e)
    if cat not in (PICO_N, PICO_I):
        raise ValueError(f"user {k} is not a Type A user")
    B = g.bs_set(b)
    z = min(q[j] for j in B) if B else 1.0
    return float(z * (e - eb) + eb) if cat == PICO_N else float(z * e)


def utility_a(q_a, est: EstimateSetA, weights, family) -> float:
    lay = _layout(est, weights)
    return float(np.sum(lay.w * family.u(_rates(lay, np.asarray(q_a, dtype=float)))))


def _value(lay, family, q) -> float:
    return float(np.sum(lay.w * family.u(_rates(lay, q))))


def _slopes(lay, family, q):
    """Per-macro slope of the macro-N terms and per-cell slope in ``z``."""
    du = lay.w * family.du(_rates(lay, q))
    h = np.zeros(lay.n0)
    np.add.at(h, lay.macro_bs, -du[lay.macro_idx] * lay.e_macro)
    p = np.zeros(len(lay.cell_mask))
    np.add.at(p, lay.pico_cell, du[lay.pico_idx] * lay.slope)
    return h, p


def _supergradient(lay, family, q) -> np.ndarray:
    h, p = _slopes(lay, family, q)
    grad = h.copy()
    live = ~lay.cell_empty
    if live.any():
        z = _cell_min(lay, q)[live]
        first = np.argmax(lay.cell_mask[live] & (q[None, :] == z[:, None]), axis=1)
        np.add.at(grad, first, p[live])
    return grad


def supergradient(q_a, est: EstimateSetA, weights, family) -> np.ndarray:
    """Supergradient; each min-term credits its lowest-index minimiser."""
    return _supergradient(_layout(est, weights), family, np.asarray(q_a, dtype=float))


def _steepest(lay, family, q, act_tol):
    """Best first-order feasible direction in the unit ball of the sup norm.

    Returns ``(value, d)``. Ties within ``act_tol`` count as active, both for
    the min-terms and the box bounds. Cells whose slope in ``z`` is negative
    use their lowest-index minimiser, which bounds the true directional
    derivative from below.
    """
    n0 = lay.n0
    h, p = _slopes(lay, family, q)
    z = _cell_min(lay, q)
    cells = [c for c in range(len(p)) if not lay.cell_empty[c]]
    conc = [c for c in cells if p[c] >= 0]
    nv = n0 + len(conc)
    cost = np.zeros(nv)
    cost[:n0] = -h
    rows = []
    for i, c in enumerate(conc):
        cost[n0 + i] = -p[c]
        for j in np.flatnonzero(lay.cell_mask[c] & (q <= z[c] + act_tol)):
            r = np.zeros(nv)
            r[n0 + i] = 1.0
            r[j] = -1.0
            rows.append(r)
    for c in cells:
        if p[c] < 0:
            j = np.flatnonzero(lay.cell_mask[c] & (q <= z[c] + act_tol))[0]
            cost[j] -= p[c]
    bounds = []
    for j in range(n0):
        lo = 0.0 if q[j] <= act_tol else -1.0
        hi = 0.0 if q[j] >= 1.0 - act_tol else 1.0
        bounds.append((lo, hi))
    bounds += [(-1.0, 1.0)] * len(conc)
    res = linprog(cost, A_ub=np.array(rows) if rows else None,
                  b_ub=np.zeros(len(rows)) if rows else None, bounds=bounds, method="highs")
    if res.status != 0:
        return 0.0, np.zeros(n0)
    return float(-res.fun), np.asarray(res.x[:n0])


def _residual(lay, family, q, act_tol=1e-9) -> float:
    return max(0.0, _steepest(lay, family, q, act_tol)[0])


def _line_search(lay, family, q, d, f0):
    with np.errstate(divide="ignore", invalid="ignore"):
        lim = np.where(d > 0, (1.0 - q) / d, np.where(d < 0, -q / d, np.inf))
    smax = float(np.min(lim)) if np.isfinite(lim).any() else 1.0
    smax = min(max(smax, 0.0), 2.0)
    if smax <= 0:
        return q, f0

    def phi(s):
        return -_value(lay, family, np.clip(q + s * d, 0.0, 1.0))

    res = minimize_scalar(phi, bounds=(0.0, smax), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, smax), "maxiter": 200})
    best_s, best_f = 0.0, f0
    for s in (res.x, smax):
        f = -phi(s)
        if f > best_f:
            best_s, best_f = s, f
    return np.clip(q + best_s * d, 0.0, 1.0), best_f


@dataclass
class QaResult:
    q: np.ndarray
    value: float
    residual: float
    iterations: int
    history: list = field(default_factory=list)


def solve_qa(est: EstimateSetA, weights, family, q0=None, tol: float = 1e-6,
             sg_iters: int = 300, polish_iters: int = 300) -> QaResult:
    """Projected supergradient ascent followed by steepest-ascent polishing.

    The returned point never has a lower objective than ``q0``.
    """
    lay = _layout(est, weights)
    n0 = lay.n0
    q = np.full(n0, 0.5) if q0 is None else np.clip(np.asarray(q0, dtype=float), 0.0, 1.0)
    best_q, best_f = q.copy(), _value(lay, family, q)
    hist = [best_f]
    it = 0
    if len(lay.users) == 0:
        return QaResult(q, best_f, 0.0, 0, hist)
    for i in range(1, sg_iters + 1):
        g = _supergradient(lay, family, q)
        norm = np.linalg.norm(g)
        if norm == 0:
            break
        q = np.clip(q + (0.3 / np.sqrt(i)) * g / norm, 0.0, 1.0)
        f = _value(lay, family, q)
        if f > best_f:
            best_q, best_f = q.copy(), f
    q, f = best_q, best_f
    hist.append(f)
    act = 1e-6
    while it < polish_iters:
        it += 1
        val, d = _steepest(lay, family, q, act)
        if val <= tol * 1e-2:
            if act <= 1e-10:
                break
            act *= 1e-2
            continue
        q_new, f_new = _line_search(lay, family, q, d, f)
        if f_new <= f:
            if act <= 1e-10:
                break
            act *= 1e-2
            continue
        q, f = q_new, f_new
        hist.append(f)
    res_val = _residual(lay, family, q)
    return QaResult(q, f, res_val, it, hist)


def solve_qa_smooth(est: EstimateSetA, weights, family, q0=None) -> QaResult:
    """Auxiliary-variable formulation: ``z_n <= q_j`` for ``j`` in ``B_n``.

    Exact when every cell's objective is nondecreasing in ``z_n`` (then each
    ``z_n`` settles at its min); solved with SLSQP.
    """
    lay = _layout(est, weights)
    n0, P = lay.n0, len(lay.cell_mask)
    q_init = np.full(n0, 0.5) if q0 is None else np.asarray(q0, dtype=float)
    z_init = _cell_min(lay, q_init)
    x0 = np.concatenate([q_init, z_init])

    def rates(x):
        q, z = x[:n0], x[n0:]
        r = np.empty(len(lay.users))
        r[lay.macro_idx] = (1.0 - q[lay.macro_bs]) * lay.e_macro
        r[lay.pico_idx] = z[lay.pico_cell] * lay.slope + lay.offset
        return r

    def fun(x):
        return -float(np.sum(lay.w * family.u(rates(x))))

    def jac(x):
        du = lay.w * family.du(rates(x))
        g = np.zeros(n0 + P)
        np.add.at(g, lay.macro_bs, -du[lay.macro_idx] * lay.e_macro)
        np.add.at(g, n0 + lay.pico_cell, du[lay.pico_idx] * lay.slope)
        return -g

    cons = []
    for c in range(P):
        for j in np.flatnonzero(lay.cell_mask[c]):
            a = np.zeros(n0 + P)
            a[j], a[n0 + c] = 1.0, -1.0
            cons.append(a)
    bounds = [(0.0, 1.0)] * (n0 + P)
    for c in range(P):
        if lay.cell_empty[c]:
            bounds[n0 + c] = (1.0, 1.0)
    constraints = ({"type": "ineq", "fun": lambda x, C=np.array(cons): C @ x,
                    "jac": lambda x, C=np.array(cons): C},) if cons else ()
    res = minimize(fun, x0, jac=jac, bounds=bounds, constraints=constraints,
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000})
    q = np.clip(res.x[:n0], 0.0, 1.0)
    f = _value(lay, family, q)
    return QaResult(q, f, _residual(lay, family, q), int(res.nit))


def residual_a(q_a, est: EstimateSetA, weights, family) -> float:
    """Largest first-order ascent rate available at ``q_a`` (zero when stationary)."""
    lay = _layout(est, weights)
    return _residual(lay, family, np.asarray(q_a, dtype=float))


# --------------------------------------------------------------------------
# frozen-sample alternating optimisation (test mode)


@dataclass
class FrozenSamplesA:
    """Type A problem with expectations replaced by averages over fixed samples.

    ``mi[s, k]`` is user ``k``'s mutual information in sample ``s`` when its
    serving BS sees the favourable pattern class (all interfering macros of a
    pico blank, the macro itself on). In the other class pico I-users and
    macro users are not served and pico N-users keep the same value.
    """

    graph: object
    mi: np.ndarray

    @classmethod
    def from_topology(cls, state, graph, n_samples: int, seed: int):
        from .rng import stream

        snr = state.snr
        K = graph.n_users
        rng = stream(seed, "oracle", 0)
        x = rng.standard_exponential((n_samples,) + snr.shape)
        mi = np.zeros((n_samples, K))
        for k in graph.users_a:
            b = graph.serving[k]
            omega = 1.0 + sum(snr[k, n] * x[:, k, n] for n in graph.pico_neighbors(k))
            mi[:, k] = np.log2(1.0 + snr[k, b] * x[:, k, b] / omega)
        return cls(graph, mi)

    def vertex(self, mu):
        """Per-class average rates of the deterministic weighted-argmax policy."""
        g = self.graph
        S, K = self.mi.shape
        ea, eb = np.zeros(K), np.zeros(K)
        for n in range(g.n_bs):
            served = [k for k in g.served(n) if g.category[k] != MACRO_I]
            if not served:
                continue
            for cls_, out in ((0, ea), (1, eb)):
                if n < g.n_macro:
                    users = served if cls_ == 0 else []
                else:
                    users = served if cls_ == 0 else [k for k in served if g.category[k] == PICO_N]
                if not users:
                    continue
                u = np.array(users)
                score = mu[u][None, :] * self.mi[:, u]
                pick = np.argmax(score, axis=1)
                np.add.at(out, u[pick], self.mi[np.arange(S), u[pick]] / S)
        return ea, eb


@dataclass
class AoResultA:
    q: np.ndarray
    e: np.ndarray
    e_bar: np.ndarray
    values: list
    residual: float
    iterations: int


def _class_prob(graph, q):
    """Probability of the favourable class at each user's serving BS."""
    pa = np.empty(graph.n_users)
    for k in range(graph.n_users):
        b = graph.serving[k]
        if b < graph.n_macro:
            pa[k] = 1.0 - q[b]
        else:
            B = graph.bs_set(b)
            pa[k] = min(q[j] for j in B) if B else 1.0
    return pa


class FrozenAoA:
    """Alternating optimisation of scheduling and blanking on frozen samples.

    Step 1 maximises over mixtures of weighted-argmax policies (column
    generation with the simplex solver); step 2 calls :func:`solve_qa` on the
    resulting conditional rates. Both steps share one deterministic objective.
    """

    def __init__(self, samples: FrozenSamplesA, weights, family, tol: float = 1e-9):
        self.s = samples
        self.g = samples.graph
        self.w = np.asarray(weights, dtype=float)
        self.family = family
        self.tol = tol
        self.cols_a, self.cols_b = [], []
        self.lam = None
        self.ua = np.array(self.g.users_a, dtype=int)

    def _matrix(self, q):
        pa = _class_prob(self.g, q)
        A = np.array([pa * ea + (1.0 - pa) * eb for ea, eb in zip(self.cols_a, self.cols_b)]).T
        return A[self.ua]

    def rates(self, q, lam=None):
        lam = self.lam if lam is None else lam
        return self._matrix(q) @ lam

    def value(self, q, lam=None) -> float:
        return float(np.sum(self.w[self.ua] * self.family.u(self.rates(q, lam))))

    def _add_column(self, mu_full):
        ea, eb = self.s.vertex(mu_full)
        for a, b in zip(self.cols_a, self.cols_b):
            if np.array_equal(a, ea) and np.array_equal(b, eb):
                return False
        self.cols_a.append(ea)
        self.cols_b.append(eb)
        if self.lam is not None:
            self.lam = np.append(self.lam, 0.0)
        return True

    def _mu(self, q):
        mu = np.zeros(self.g.n_users)
        if self.lam is None:
            mu[self.ua] = self.w[self.ua]
        else:
            mu[self.ua] = self.w[self.ua] * self.family.du(self.rates(q))
        return mu

    def step1(self, q, max_rounds: int = 200):
        from .simplex import maximize_on_simplex

        if not self.cols_a:
            self._add_column(self._mu(q))
            self.lam = np.ones(1)
        for _ in range(max_rounds):
            A = self._matrix(q)
            res = maximize_on_simplex(A, self.w[self.ua], self.family, q0=self.lam,
                                      tol=self.tol, sparse=False)
            if res.value >= self.value(q):
                self.lam = res.q
            if not self._add_column(self._mu(q)):
                break
            if self.fw_gap(q) <= self.tol:
                self.cols_a.pop()
                self.cols_b.pop()
                self.lam = self.lam[:-1]
                break
        return self.value(q)

    def fw_gap(self, q) -> float:
        """``mu . (x_new - x)`` for the best response to the current weights."""
        mu = self._mu(q)
        ea, eb = self.s.vertex(mu)
        pa = _class_prob(self.g, q)
        x_new = (pa * ea + (1.0 - pa) * eb)[self.ua]
        return float(np.dot(mu[self.ua], x_new - self.rates(q)))

    def estimates(self) -> EstimateSetA:
        ea = np.array(self.cols_a).T @ self.lam
        eb = np.array(self.cols_b).T @ self.lam
        return EstimateSetA(self.g, ea, eb)

    def run(self, q0=None, max_iter: int = 30, tol: float = 1e-10) -> AoResultA:
        q = np.full(self.g.n_macro, 0.5) if q0 is None else np.asarray(q0, dtype=float)
        values = []
        it = 0
        for it in range(1, max_iter + 1):
            self.step1(q)
            values.append(self.value(q))
            est = self.estimates()
            res = solve_qa(est, self.w, self.family, q0=q)
            q = res.q
            values.append(self.value(q))
            if len(values) >= 3 and values[-1] - values[-3] <= tol:
                break
        self.step1(q)
        values.append(self.value(q))
        est = self.estimates()
        return AoResultA(q, est.e, est.e_bar, values,
                         fixed_point_check_a(q, est, self.w, self.family, self), it)


def fixed_point_check_a(q_a, est: EstimateSetA, weights, family, frozen: FrozenAoA = None) -> float:
    """First-order optimality violation of ``q_a`` (plus the scheduling gap when
    a frozen-sample problem is supplied)."""
    r = residual_a(q_a, est, weights, family)
    if frozen is not None:
        r += max(0.0, frozen.fw_gap(np.asarray(q_a, dtype=float)))
    return r


def warn_inverted(est: EstimateSetA, tol: float = 1e-9) -> int:
    """Count users whose unfavourable-class estimate exceeds the favourable one
    where that is structurally impossible; warn if any."""
    g = est.graph
    cat = g.category
    bad = int(np.sum(((cat == MACRO_N) | (cat == PICO_I)) & (est.e_bar > est.e + tol)))
    if bad:
        warnings.warn(f"{bad} users with e_bar > e", RuntimeWarning, stacklevel=2)
    return bad
