"""Interference graph on macro I-users, maximal independent sets and MWIS."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIS_CAP = 25


class GraphTooLarge(ValueError):
    """Exact enumeration requested above the vertex cap."""


@dataclass(frozen=True, eq=False)
class InterferenceGraph:
    """Conflict graph: one vertex per macro I-user, in ascending user id.

    ``adj`` is a symmetric boolean matrix over vertex positions and
    ``serving`` the serving macro of each vertex.
    """

    users: tuple
    adj: np.ndarray
    serving: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=bool)
        if adj.shape != (len(self.users),) * 2:
            raise ValueError("adjacency shape does not match the vertex count")
        if np.any(np.diag(adj)) or not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric without self-loops")
        object.__setattr__(self, "adj", adj)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(self.users))

    @property
    def n(self) -> int:
        return len(self.users)

    def index(self, user: int) -> int:
        return self.users.index(user)

    def edges(self) -> list:
        i, j = np.nonzero(np.triu(self.adj))
        return [(self.users[a], self.users[b]) for a, b in zip(i, j)]

    def is_independent(self, vs) -> bool:
        idx = [self.index(k) for k in vs]
        return not self.adj[np.ix_(idx, idx)].any()

    def is_maximal(self, vs) -> bool:
        idx = set(self.index(k) for k in vs)
        for v in range(self.n):
            if v not in idx and not any(self.adj[v, u] for u in idx):
                return False
        return True

    def _masks(self):
        return [sum(1 << int(j) for j in np.flatnonzero(self.adj[i])) for i in range(self.n)]


def build_interference_graph(graph) -> InterferenceGraph:
    """Edge between ``k`` and ``k'`` when either reaches the other's serving BS."""
    ub = tuple(graph.users_b)
    n = len(ub)
    adj = np.zeros((n, n), dtype=bool)
    for i, k in enumerate(ub):
        for j in range(i + 1, n):
            kk = ub[j]
            if graph.edges[k, graph.serving[kk]] or graph.edges[kk, graph.serving[k]]:
                adj[i, j] = adj[j, i] = True
    return InterferenceGraph(ub, adj, tuple(int(graph.serving[k]) for k in ub),
                             tuple(graph.user_labels[k] for k in ub))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def enumerate_mis(ig: InterferenceGraph, cap: int = MIS_CAP) -> list:
    """All maximal independent sets as sorted tuples of user ids, sorted.

    Bron-Kerbosch with pivoting on the complement graph.
    """
    if ig.n > cap:
        raise GraphTooLarge(f"{ig.n} vertices exceed the exact cap {cap}; "
                            "use the greedy MWIS path")
    if ig.n == 0:
        return [()]
    full = (1 << ig.n) - 1
    nbr = ig._masks()
    comp = [full & ~nbr[i] & ~(1 << i) for i in range(ig.n)]
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(r)
            return
        pivot = max(_bits(p | x), key=lambda u: bin(comp[u] & p).count("1"))
        for v in list(_bits(p & ~comp[pivot])):
            bk(r | (1 << v), p & comp[v], x & comp[v])
            p &= ~(1 << v)
            x |= 1 << v

    bk(0, full, 0)
    sets = [tuple(ig.users[i] for i in _bits(m)) for m in out]
    return sorted(sets)


@dataclass(frozen=True)
class MwisResult:
    vertices: tuple
    weight: float
    exact: bool


def _weights_by_user(ig, weights):
    w = np.asarray(weights, dtype=float)
    if w.shape != (ig.n,):
        raise ValueError("one weight per vertex required")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    return w


def maximalize(ig: InterferenceGraph, vs) -> tuple:
    """Add non-conflicting vertices in ascending order until maximal."""
    chosen = [ig.index(k) for k in vs]
    for v in range(ig.n):
        if v not in chosen and not any(ig.adj[v, u] for u in chosen):
            chosen.append(v)
    return tuple(sorted(ig.users[i] for i in chosen))


def max_weight_independent_set(ig: InterferenceGraph, weights, cap: int = MIS_CAP) -> MwisResult:
    """Exact below the cap (lexicographically smallest among ties), greedy above.

    ``weights`` are indexed by vertex position. The result is always maximal.
    """
    w = _weights_by_user(ig, weights)
    if ig.n == 0:
        return MwisResult((), 0.0, True)
    if ig.n <= cap:
        best, best_w = None, -np.inf
        for s in enumerate_mis(ig, cap):
            val = float(sum(w[ig.index(k)] for k in s))
            if val > best_w:
                best, best_w = s, val
        return MwisResult(best, best_w, True)
    alive = np.ones(ig.n, dtype=bool)
    pick = []
    while alive.any():
        deg = (ig.adj & alive[None, :]).sum(axis=1)
        score = np.where(alive, w / (deg + 1.0), -np.inf)
        v = int(np.argmax(score))
        pick.append(v)
        alive[v] = False
        alive[ig.adj[v]] = False
    vs = maximalize(ig, [ig.users[i] for i in pick])
    return MwisResult(vs, float(sum(w[ig.index(k)] for k in vs)), False)


def mi_vector_deterministic(vs, state, graph, ig: InterferenceGraph) -> np.ndarray:
    """Interference-free rate of each member (zero for non-members), over ``ig.users``."""
    if not ig.is_independent(vs):
        raise ValueError("vertex set is not independent")
    out = np.zeros(ig.n)
    for k in vs:
        out[ig.index(k)] = np.log2(1.0 + state.snr[k, graph.serving[k]])
    return out


def to_adjacency_text(ig: InterferenceGraph, labels: bool = False) -> str:
    """Isolated vertices on their own line, then one ``u v`` pair per edge.

    Vertices are written as user ids, or as user labels when ``labels``.
    """
    name = ig.labels if labels else ig.users
    deg = ig.adj.sum(axis=1)
    lines = [str(name[i]) for i in range(ig.n) if deg[i] == 0]
    i, j = np.nonzero(np.triu(ig.adj))
    lines += [f"{name[a]} {name[b]}" for a, b in zip(i, j)]
    return "\n".join(lines) + "\n"


def from_adjacency_text(text: str, serving=None) -> InterferenceGraph:
    verts, edges = set(), []
    for raw in text.splitlines():
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) > 2:
            raise ValueError(f"bad adjacency line: {raw!r}")
        ids = [int(p) for p in parts]
        verts.update(ids)
        if len(ids) == 2:
            if ids[0] == ids[1]:
                raise ValueError("self-loop in adjacency list")
            edges.append(ids)
    users = tuple(sorted(verts))
    pos = {k: i for i, k in enumerate(users)}
    adj = np.zeros((len(users), len(users)), dtype=bool)
    for a, b in edges:
        adj[pos[a], pos[b]] = adj[pos[b], pos[a]] = True
    serv = tuple(int(serving[k]) for k in users) if serving is not None else ()
    return InterferenceGraph(users, adj, serv)
