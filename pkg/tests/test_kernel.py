import os
import subprocess
import sys

import numpy as np
import pytest

from hetnet_abrb import kernel
from hetnet_abrb.kernel import build_problem, bs_chunks, run_superframe
from hetnet_abrb.netmodel import fading_block
from hetnet_abrb.scheduler import MODE_A, MODE_B, MODE_FULL, RateTracker, schedule, mutual_information

from conftest import random_topology

HAVE_EXT = kernel._compiled is not None


def _inputs(rng, g, T, M):
    pats = rng.integers(0, 2, (T, M, g.n_macro)).astype(np.int8)
    pidx = rng.integers(0, 2, (T, M)).astype(np.int32)
    mode = np.array([MODE_A, MODE_B, MODE_FULL][:M], dtype=np.int8)
    allowed = (rng.random((g.n_users, M)) < 0.9).astype(np.uint8)
    return pats, pidx, mode, allowed


def _run(st, g, inputs, family, T, M, seed=1, name=None, workers=1):
    prob = build_problem(st, g)
    fad = np.stack([fading_block(seed, t, M, prob.n_links) for t in range(T)])
    tr = RateTracker(g.n_users, 2)
    res = run_superframe(prob, *inputs[:2], fad, *inputs[2:], np.ones(g.n_users), family, tr,
                         workers=workers, name=name)
    return res, tr, fad


def _reference(st, g, inputs, family, fad, T, M):
    """Subframe-by-subframe loop over the readable scheduler functions."""
    pats, _, mode, allowed = inputs
    links = g.links()
    tr = RateTracker(g.n_users, 2)
    chosen = np.full((T, M, g.n_bs), -1)
    for t in range(T):
        tr.update_rate(t)
        mu = tr.weights(family, np.ones(g.n_users))
        r = np.zeros(g.n_users)
        for m in range(M):
            gain = np.zeros_like(st.sigma_sq)
            gain[links[:, 0], links[:, 1]] = st.sigma_sq[links[:, 0], links[:, 1]] * fad[t, m]
            for n in range(g.n_bs):
                k = schedule(n, int(mode[m]), pats[t, m], gain, mu, st, g, allowed[:, m])
                if k is not None:
                    chosen[t, m, n] = k
                    r[k] += mutual_information(k, pats[t, m], gain, st, g, int(mode[m]))
        tr.r_prev = r
    return chosen, tr


@pytest.mark.parametrize("name", ["python"] + (["cython"] if HAVE_EXT else []))
def test_kernel_matches_reference(name, pf):
    rng = np.random.default_rng(3)
    for _ in range(5):
        st, g = random_topology(rng, n0=2, n_pico=3, n_users=12)
        T, M = 30, 3
        inp = _inputs(rng, g, T, M)
        res, tr, fad = _run(st, g, inp, pf, T, M, name=name)
        chosen, ref = _reference(st, g, inp, pf, fad, T, M)
        assert np.array_equal(res.chosen, chosen)
        np.testing.assert_allclose(tr.R, ref.R, rtol=1e-12)


@pytest.mark.skipif(not HAVE_EXT, reason="compiled kernel not built")
def test_backends_agree(small_network, pf):
    st, g = small_network
    rng = np.random.default_rng(0)
    inp = _inputs(rng, g, 40, 3)
    a, ta, _ = _run(st, g, inp, pf, 40, 3, name="python")
    b, tb, _ = _run(st, g, inp, pf, 40, 3, name="cython")
    assert np.array_equal(a.chosen, b.chosen)
    np.testing.assert_allclose(a.mi, b.mi, rtol=1e-13)
    np.testing.assert_allclose(ta.acc_a_sum, tb.acc_a_sum, rtol=1e-12)
    assert np.array_equal(ta.acc_a_cnt, tb.acc_a_cnt)
    assert np.array_equal(ta.acc_b_cnt, tb.acc_b_cnt)


def test_workers_do_not_change_results(small_network, pf):
    st, g = small_network
    inp = _inputs(np.random.default_rng(1), g, 20, 3)
    a, ta, _ = _run(st, g, inp, pf, 20, 3, workers=1)
    b, tb, _ = _run(st, g, inp, pf, 20, 3, workers=4)
    assert np.array_equal(a.chosen, b.chosen) and np.array_equal(a.mi, b.mi)
    assert np.array_equal(ta.R, tb.R) and np.array_equal(ta.acc_b_sum, tb.acc_b_sum)


def test_bs_chunks_partition():
    chunks = bs_chunks(7, 3)
    assert np.array_equal(np.concatenate(chunks), np.arange(7))
    assert len(bs_chunks(2, 8)) == 2


def test_backend_selection():
    assert kernel.backend("python").__name__.endswith("_kernel_py")
    with pytest.raises(ValueError):
        kernel.backend("fortran")
    env = dict(os.environ, HETNET_ABRB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import hetnet_abrb as h; print(h.KERNEL_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
