"""Property-based checks of the structural invariants."""
import itertools

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hetnet_abrb.abrb import synchronous_pmf
from hetnet_abrb.graph_b import InterferenceGraph, enumerate_mis, max_weight_independent_set
from hetnet_abrb.metrics import worst_fraction_mean
from hetnet_abrb.netmodel import topology_from_edges
from hetnet_abrb.scheduler import RateTracker
from hetnet_abrb.simplex import maximize_on_simplex
from hetnet_abrb.utility import UtilityFamily, solve_qs, split_objective

unit = st.floats(0.0, 1.0, allow_nan=False)
qvec = st.lists(unit, min_size=1, max_size=6).map(np.array)
families = st.sampled_from([UtilityFamily("pf"), UtilityFamily("alpha", alpha=2.0),
                            UtilityFamily("alpha", alpha=0.5), UtilityFamily("sum")])


@given(qvec, st.data())
def test_pmf_structure(q, data):
    pmf = synchronous_pmf(q)
    sup = np.array(pmf.support)
    n0 = len(q)
    assert len(sup) <= n0 + 1
    assert np.all(pmf.probs > 0) and abs(pmf.probs.sum() - 1) <= 1e-12
    blank = [frozenset(np.flatnonzero(a == 0)) for a in sup]
    for a, b in itertools.combinations(blank, 2):
        assert a <= b or b <= a
    np.testing.assert_allclose(pmf.marginals(), q, atol=1e-12)
    B = data.draw(st.sets(st.integers(0, n0 - 1), min_size=1))
    p_fav = sum(p for a, p in zip(sup, pmf.probs) if all(a[j] == 0 for j in B))
    assert abs(p_fav - min(q[j] for j in B)) <= 1e-12
    for n in range(n0):
        assert abs(sum(p for a, p in zip(sup, pmf.probs) if a[n] == 1) - (1 - q[n])) <= 1e-12


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6, unique=True))
def test_full_support_when_distinct_interior(q):
    assert len(synchronous_pmf(q).support) == len(q) + 1


@given(families, st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_scaling_identity(fam, c, r):
    lhs = fam.u(c * r)
    assert abs(lhs - fam.f(c) * fam.u(r) - fam.g(c)) <= 1e-9 * max(1.0, abs(lhs))


@given(families, st.integers(2, 40), st.floats(0.01, 5), st.floats(0.01, 5),
       st.floats(0.5, 30), st.floats(0.5, 30))
def test_solve_qs_exhaustive(fam, M, ua, ub, wa, wb):
    if fam.kind == "alpha" and fam.alpha > 1:
        ua, ub = -ua, -ub
    _, m = solve_qs(ua, ub, fam, M, wa, wb)
    assert 1 <= m <= M - 1
    vals = split_objective(np.arange(1, M) / M, ua, ub, fam, M, wa, wb)
    assert split_objective(m / M, ua, ub, fam, M, wa, wb) >= vals.max() - 1e-12 * max(1, abs(vals.max()))


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    adj = np.zeros((n, n), dtype=bool)
    for (i, j), b in zip(itertools.combinations(range(n), 2), bits):
        adj[i, j] = adj[j, i] = b
    return InterferenceGraph(tuple(range(n)), adj)


@given(graphs())
@settings(max_examples=60)
def test_mis_enumeration(ig):
    found = enumerate_mis(ig)
    brute = sorted(s for r in range(ig.n + 1) for s in itertools.combinations(ig.users, r)
                   if ig.is_independent(s) and ig.is_maximal(s))
    assert found == brute


@given(graphs(), st.data())
@settings(max_examples=60)
def test_mwis_optimal(ig, data):
    w = np.array(data.draw(st.lists(st.floats(0, 5), min_size=ig.n, max_size=ig.n)))
    r = max_weight_independent_set(ig, w)
    assert ig.is_independent(r.vertices) and ig.is_maximal(r.vertices)
    assert all(r.weight >= w[list(s)].sum() - 1e-12 for s in enumerate_mis(ig))


@given(arrays(float, (4, 3), elements=st.floats(0.0, 5.0)), families)
@settings(max_examples=60)
def test_simplex_kkt(A, fam):
    assume(fam.kind == "sum" or np.any(A > 1e-3))
    A = A + 1e-3
    res = maximize_on_simplex(A, np.ones(4), fam)
    assert res.q.min() >= 0 and abs(res.q.sum() - 1) <= 1e-12
    assert res.gap <= 1e-6 * max(1.0, np.abs(A.T @ fam.du(A @ res.q)).max())


@given(st.lists(st.floats(0, 100), min_size=1, max_size=200))
def test_rate_tracker_nonnegative(rates):
    tr = RateTracker(1)
    for tau, r in enumerate(rates):
        tr.update_rate(tau, [r])
        assert tr.R[0] >= 0
    assert tr.R[0] <= max(rates) + 1e-9


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=100))
def test_worst_fraction_bounds(v):
    assert worst_fraction_mean(v) <= np.mean(v) + 1e-9 * max(1, np.mean(v))


@given(st.integers(1, 4), st.integers(0, 3), st.integers(1, 8), st.data())
@settings(max_examples=80)
def test_topology_partition(n0, n_pico, K, data):
    N = n0 + n_pico
    serving = data.draw(st.lists(st.integers(0, N - 1), min_size=K, max_size=K))
    extra = data.draw(arrays(bool, (K, N)))
    extra[np.arange(K), serving] = True
    g = topology_from_edges(n0, serving, extra)
    assert g.assumption3_holds()
    assert sorted(g.users_a + g.users_b) == list(range(K))
    assert all(g.serving[k] < n0 for k in g.users_b)
