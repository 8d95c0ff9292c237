import itertools

import numpy as np
import pytest

from hetnet_abrb.abrb import AbrbProfile
from hetnet_abrb.graph_b import build_interference_graph, enumerate_mis
from hetnet_abrb.netmodel import LargeScaleState, topology_from_edges
from hetnet_abrb.opt_b import _mi_matrix, algorithm_b2, greedy_cover, solve_qb, solve_qcheck
from hetnet_abrb.simplex import DegenerateObjective
from hetnet_abrb.utility import UtilityFamily

from conftest import random_topology

PF = UtilityFamily("pf")


def _uniform_state(g, snr=100.0):
    return LargeScaleState(np.full((g.n_users, g.n_bs), snr), g.n_macro, np.ones(g.n_bs), 1.0)


@pytest.fixture
def conflicting_pair():
    # two macro I-users, each reaching the other's serving macro
    g = topology_from_edges(2, [0, 1], [[1, 1], [1, 1]])
    return _uniform_state(g), g


def test_qcheck_examples(conflicting_pair):
    st, g = conflicting_pair
    ig = build_interference_graph(g)
    q, _ = solve_qcheck([(0,), (1,)], st, g, ig, np.ones(2), PF)
    np.testing.assert_allclose(q, [0.5, 0.5], atol=1e-9)
    ts = np.linspace(0, 1, 1001)
    A = _mi_matrix([(0,), (1,)], st, g, ig)
    best = max(np.sum(PF.u(A @ [t, 1 - t])) for t in ts)
    assert np.sum(PF.u(A @ q)) >= best - 1e-12
    g2 = topology_from_edges(2, [0, 1], [[1, 0], [0, 1]])
    st2 = _uniform_state(g2)
    # no I-users: nothing to solve, empty profile
    assert len(algorithm_b2(g2, build_interference_graph(g2), st2, np.ones(2), PF).profile) == 0


def test_qcheck_dominant_weighted_sum(fig4):
    st, g = fig4
    ig = build_interference_graph(g)
    q, _ = solve_qcheck([(0, 2), (0,)], st, g, ig, np.ones(g.n_users), UtilityFamily("sum"))
    np.testing.assert_allclose(q, [1.0, 0.0])
    q, _ = solve_qcheck([(0, 2)], st, g, ig, np.ones(g.n_users), UtilityFamily("sum"))
    assert q.tolist() == [1.0]
    with pytest.raises(ValueError):
        solve_qcheck([], st, g, ig, np.ones(g.n_users), PF)


def test_b2_fig4(fig4):
    st, g = fig4
    ig = build_interference_graph(g)
    r = algorithm_b2(g, ig, st, np.ones(g.n_users), PF)
    lab = sorted(tuple(g.user_labels[k] for k in v) for v in r.theta)
    assert lab == [(1, 3), (1, 4), (2,)]
    assert r.profile.bits() == ["101", "010"]
    np.testing.assert_allclose(r.q, [0.375, 0.375, 0.25], atol=1e-9)
    np.testing.assert_allclose(r.q_profile, [0.75, 0.25], atol=1e-9)


def test_b2_conflicting_pair(conflicting_pair):
    st, g = conflicting_pair
    ig = build_interference_graph(g)
    r = algorithm_b2(g, ig, st, np.ones(2), PF)
    assert sorted(r.theta) == [(0,), (1,)]
    np.testing.assert_allclose(r.q, [0.5, 0.5], atol=1e-9)
    assert r.value == pytest.approx(_brute_force(g, ig, st, np.ones(2), PF), abs=1e-9)


def test_b2_edgeless():
    g = topology_from_edges(3, [0, 1], [[1, 0, 1], [0, 1, 1]])
    st = _uniform_state(g)
    ig = build_interference_graph(g)
    assert ig.edges() == []
    r = algorithm_b2(g, ig, st, np.ones(2), PF)
    assert r.theta == [(0, 1)] and r.q.tolist() == [1.0]
    assert r.profile.bits() == ["110"]


def test_solve_qb_examples(fig4):
    q, _ = solve_qb(AbrbProfile(((1, 0),)), np.array([[1.0], [2.0]]), np.ones(2), PF)
    assert q.tolist() == [1.0]
    est = np.array([[2.0, 0.0], [0.0, 2.0], [3.0, 0.0], [0.0, 3.0]])
    q, _ = solve_qb(AbrbProfile(((1, 0), (0, 1))), est, np.ones(4), PF)
    np.testing.assert_allclose(q, [0.5, 0.5], atol=1e-9)
    st, g = fig4
    ig = build_interference_graph(g)
    theta = [(0, 2), (0, 3), (1,)]
    qc, vc = solve_qcheck(theta, st, g, ig, np.ones(4), PF)
    qb, vb = solve_qb(AbrbProfile(((1, 0, 1), (1, 0, 0), (0, 1, 0))), _mi_matrix(theta, st, g, ig),
                      np.ones(4), PF)
    assert vb == pytest.approx(vc, abs=1e-9)
    with pytest.raises(ValueError):
        solve_qb(AbrbProfile(((1, 0),)), est, np.ones(4), PF)
    with pytest.raises(DegenerateObjective):
        solve_qb(AbrbProfile(((1, 0), (0, 1))), np.zeros((2, 2)), np.ones(2), PF)


def test_greedy_cover_covers(fig4):
    _, g = fig4
    ig = build_interference_graph(g)
    cover = greedy_cover(ig)
    assert set().union(*cover) == set(ig.users)
    assert all(ig.is_maximal(s) for s in cover)


def _brute_force(g, ig, st, w, fam):
    mis = enumerate_mis(ig)
    best = -np.inf
    for r in range(1, min(len(mis), ig.n + 1) + 1):
        for theta in itertools.combinations(mis, r):
            try:
                _, v = solve_qcheck(list(theta), st, g, ig, w, fam, tol=1e-12)
            except DegenerateObjective:
                continue
            best = max(best, v)
    return best


def macro_fixtures(n, seed=0, max_theta=6):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        st, g = random_topology(rng, n0=int(rng.integers(2, 5)), n_pico=0,
                                n_users=int(rng.integers(3, 7)), p_extra=0.8, snr_db=(10, 30))
        ig = build_interference_graph(g)
        if ig.n >= 2 and len(enumerate_mis(ig)) <= max_theta:
            out.append((st, g, ig))
    return out


@pytest.mark.parametrize("fam", [PF, UtilityFamily("alpha", alpha=2.0)])
def test_b2_invariants_and_brute_force(fam):
    for st, g, ig in macro_fixtures(12, seed=4):
        w = np.ones(g.n_users)
        r = algorithm_b2(g, ig, st, w, fam)
        assert np.all(np.diff(r.history) >= 0)
        assert max(r.sizes) <= ig.n + 1
        assert len(r.profile) <= ig.n and len(r.theta) <= ig.n + 1
        assert r.value == pytest.approx(_brute_force(g, ig, st, w, fam), rel=1e-9, abs=1e-9)
