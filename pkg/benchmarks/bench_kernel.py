"""Time the compiled and numpy scheduling kernels on one super-frame.

    python3 benchmarks/bench_kernel.py [--repeat 5] [--superframe-len 200]

Both backends run on identical inputs; the script also checks that their
outputs agree bit for bit.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from hetnet_abrb.config import NetworkConfig
from hetnet_abrb.kernel import _compiled, build_problem, run_superframe
from hetnet_abrb.netmodel import build_network, fading_block
from hetnet_abrb.scheduler import MODE_A, MODE_B, RateTracker
from hetnet_abrb.utility import UtilityFamily


def inputs(net, state, graph, problem, T, seed=0):
    rng = np.random.default_rng(seed)
    M, n0 = net.M, graph.n_macro
    pats = (rng.random((T, M, n0)) < 0.6).astype(np.int8)
    pidx = np.zeros((T, M), dtype=np.int32)
    mode = np.array([MODE_A] * (M - 2) + [MODE_B] * 2, dtype=np.int8)
    fad = np.stack([fading_block(seed, t, M, problem.n_links) for t in range(T)])
    allowed = np.ones((graph.n_users, M), dtype=np.uint8)
    return pats, pidx, fad, mode, allowed


def time_backend(name, problem, args, graph, family, repeat, workers):
    best, out = np.inf, None
    for _ in range(repeat):
        tr = RateTracker(graph.n_users, 1, family.eps)
        t0 = time.perf_counter()
        res = run_superframe(problem, *args, np.ones(graph.n_users), family, tr, workers, name=name)
        best = min(best, time.perf_counter() - t0)
        out = res
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--superframe-len", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args(argv)
    net = NetworkConfig(superframe_len=a.superframe_len)
    state, graph = build_network(net, 0)
    problem = build_problem(state, graph)
    pats, pidx, fad, mode, allowed = inputs(net, state, graph, problem, a.superframe_len)
    family = UtilityFamily("pf", 1.0, 1e-6)
    args = (pats, pidx, fad, mode, allowed)
    print(f"users={graph.n_users} bs={graph.n_bs} links={problem.n_links} "
          f"subframes={a.superframe_len} M={net.M}")
    t_py, r_py = time_backend("python", problem, args, graph, family, max(1, a.repeat // 2),
                              a.workers)
    print(f"python  {t_py * 1e3:9.2f} ms/super-frame")
    if _compiled is None:
        print("cython  unavailable (extension not built)")
        return 0
    t_cy, r_cy = time_backend("cython", problem, args, graph, family, a.repeat, a.workers)
    same = (np.array_equal(r_py.chosen, r_cy.chosen) and np.array_equal(r_py.mi, r_cy.mi)
            and np.array_equal(r_py.rate_sum, r_cy.rate_sum))
    print(f"cython  {t_cy * 1e3:9.2f} ms/super-frame")
    print(f"speedup {t_py / t_cy:9.1f}x  identical={same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
