"""Two-timescale control loop.

The base-station side schedules every subframe of a super-frame using only the
last delivered :class:`LongTermControl` and its own channel samples, then
returns a :class:`StatisticsReport`. The resource-management side turns
reports into the next control. Both messages round-trip through plain dicts
so the boundary can be serialised.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baselines
from .abrb import AbrbProfile, ProfilePmf, from_bits, synchronous_pmf, to_bits
from .config import ConfigError, Scenario
from .graph_b import build_interference_graph
from . import invariants
from .kernel import build_problem, run_superframe
from .metrics import MetricsReport, compute_metrics, user_table
from .netmodel import build_network, fading_block
from .opt_a import EstimateSetA, solve_qa
from .opt_b import algorithm_b2, solve_qb
from .rng import stream
from .scheduler import MODE_A, MODE_B, RateTracker, estimates_a, estimates_b
from .simplex import DegenerateObjective
from .utility import UtilityFamily, solve_qs

ALGORITHMS = ("proposed", "baseline1", "baseline2")


@dataclass
class LongTermControl:
    T: int
    M: int
    m_a: int
    q_a: list
    profile: list
    q_b: list

    def __post_init__(self):
        if not 0 <= self.m_a <= self.M:
            raise ValueError("M_A outside [0, M]")
        if self.m_b > 0 and not self.profile:
            raise ValueError("Type B subbands without a profile")

    @property
    def m_b(self) -> int:
        return self.M - self.m_a

    @property
    def q_s(self) -> float:
        return self.m_a / self.M

    def pmf(self):
        return synchronous_pmf(self.q_a)

    def profile_obj(self) -> AbrbProfile:
        return AbrbProfile(tuple(from_bits(b) for b in self.profile))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pmf"] = self.pmf().as_pairs()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LongTermControl":
        keys = ("T", "M", "m_a", "q_a", "profile", "q_b")
        return cls(**{k: d[k] for k in keys})


@dataclass
class StatisticsReport:
    T: int
    e: list
    e_bar: list
    est_b: list
    count_a: list
    count_b: list
    R: list
    realized_a: list
    realized_b: list
    rate: list

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "StatisticsReport":
        return cls(**d)


def _tolist(a):
    return np.asarray(a).tolist()


class BaseStations:
    """All base stations of the network, driven one super-frame at a time."""

    def __init__(self, state, graph, scenario: Scenario, family, weights, seed: int,
                 workers: int = 1):
        self.state, self.graph = state, graph
        self.net, self.sim = scenario.network, scenario.simulation
        self.family, self.w, self.seed = family, np.asarray(weights, dtype=float), seed
        self.workers = workers
        self.problem = build_problem(state, graph)
        self.tracker = RateTracker(graph.n_users, 1, self.sim.eps)
        self.prev_a = None
        self.prev_b = None
        self.prev_profile = None

    def fading(self, t0: int, T: int) -> np.ndarray:
        M, L = self.net.M, self.problem.n_links
        return np.stack([fading_block(self.seed, t, M, L) for t in range(t0, t0 + T)])

    def proposed_inputs(self, ctrl: LongTermControl, t0: int, T: int):
        M, n0 = ctrl.M, self.graph.n_macro
        pmf = ctrl.pmf()
        sup = np.array(pmf.support, dtype=np.int8)
        prof = ctrl.profile_obj()
        ppmf = ProfilePmf(np.asarray(ctrl.q_b)) if ctrl.m_b else None
        psup = np.array(prof.patterns, dtype=np.int8) if len(prof) else None
        pats = np.ones((T, M, n0), dtype=np.int8)
        pidx = np.zeros((T, M), dtype=np.int32)
        for i, t in enumerate(range(t0, t0 + T)):
            u = stream(self.seed, "pattern", t).random(M)
            if ctrl.m_a:
                pats[i, : ctrl.m_a] = sup[pmf.sample_index(u[: ctrl.m_a])]
            if ctrl.m_b:
                j = ppmf.sample_index(u[ctrl.m_a:])
                pidx[i, ctrl.m_a:] = j
                pats[i, ctrl.m_a:] = psup[j]
        mode = np.array([MODE_A] * ctrl.m_a + [MODE_B] * ctrl.m_b, dtype=np.int8)
        allowed = np.ones((self.graph.n_users, M), dtype=np.uint8)
        return pats, pidx, mode, allowed

    def run(self, ctrl: LongTermControl, trace=None):
        """One super-frame under ``ctrl``; returns ``(report, kernel result)``."""
        T, L_S = ctrl.T, self.net.superframe_len
        t0 = T * L_S
        prof = ctrl.profile_obj()
        self.tracker.reset_estimates(max(1, len(prof)))
        pats, pidx, mode, allowed = self.proposed_inputs(ctrl, t0, L_S)
        res = run_superframe(self.problem, pats, pidx, self.fading(t0, L_S), mode, allowed,
                             self.w, self.family, self.tracker, self.workers)
        if invariants.debug_enabled(self.sim):
            invariants.check_schedule(self.graph, pats, mode, allowed, res.chosen)
            invariants.check_tracker(self.tracker)
        if trace is not None:
            write_trace(trace, t0, pats, res)
        g = self.graph
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            e, eb = estimates_a(self.tracker, g, self.prev_a)
            same = self.prev_profile == ctrl.profile
            est_b = (estimates_b(self.tracker, g, prof, self.prev_b if same else None)
                     if len(prof) else np.zeros((len(g.users_b), 0)))
        self.prev_a, self.prev_b, self.prev_profile = (e, eb), est_b, list(ctrl.profile)
        tr = self.tracker
        cnt_a = tr.acc_a_cnt.sum(axis=1)
        cnt_b = tr.acc_b_cnt.sum(axis=1)
        real_a = np.where(cnt_a > 0, tr.acc_a_sum.sum(axis=1) / np.maximum(cnt_a, 1), 0.0)
        real_b = np.where(cnt_b > 0, tr.acc_b_sum.sum(axis=1) / np.maximum(cnt_b, 1), 0.0)
        rep = StatisticsReport(T, _tolist(e), _tolist(eb), _tolist(est_b), _tolist(tr.acc_a_cnt),
                               _tolist(tr.acc_b_cnt), _tolist(tr.R), _tolist(real_a),
                               _tolist(real_b), _tolist(res.rate_sum / L_S))
        return rep, res


class Rrms:
    """Long-timescale optimiser: blanking marginals, Type B profile, split."""

    def __init__(self, state, graph, scenario: Scenario, family, weights):
        self.state, self.graph = state, graph
        self.net, self.sim = scenario.network, scenario.simulation
        self.family, self.w = family, np.asarray(weights, dtype=float)
        self.ig = build_interference_graph(graph)
        self.ua = np.array(graph.users_a, dtype=int)
        self.ub = np.array(graph.users_b, dtype=int)
        self.wa, self.wb = float(self.w[self.ua].sum()), float(self.w[self.ub].sum())
        self.q_a = np.full(graph.n_macro, self.sim.warmup_qa)
        self.b2 = None
        self._run_b2()
        self.q_b = np.full(len(self.profile), 1.0 / max(1, len(self.profile)))
        self.m_a = self._initial_split()

    def _run_b2(self):
        self.b2 = algorithm_b2(self.graph, self.ig, self.state, self.w, self.family)
        self.profile = self.b2.profile

    def _initial_split(self) -> int:
        M = self.net.M
        if not len(self.ub):
            return M
        if not len(self.ua):
            return 0
        return int(min(max(round(M * self.wa / (self.wa + self.wb)), 1), M - 1))

    def control(self, T: int) -> LongTermControl:
        return LongTermControl(T, self.net.M, self.m_a, _tolist(self.q_a),
                               self.profile.bits(), _tolist(self.q_b))

    def update(self, rep: StatisticsReport) -> dict:
        """Consume a report; returns the optimiser record for the metrics stream."""
        fam, g = self.family, self.graph
        rec = {}
        ua_val = 0.0
        if len(self.ua):
            est = EstimateSetA(g, np.array(rep.e), np.array(rep.e_bar))
            res = solve_qa(est, self.w, fam, q0=self.q_a)
            self.q_a, ua_val = res.q, res.value
            rec.update(qa_iterations=res.iterations, qa_residual=res.residual)
        ub_val = 0.0
        if len(self.ub):
            est_b = np.array(rep.est_b).reshape(len(self.ub), -1)
            wb = self.w[self.ub]
            if est_b.shape[1] == len(self.profile):
                try:
                    self.q_b, ub_val = solve_qb(self.profile, est_b, wb, fam, q0=self.q_b)
                except DegenerateObjective:
                    ub_val = float(np.sum(wb * fam.u(est_b @ self.q_b)))
            if (rep.T + 1) % self.sim.profile_period == 0:
                old = self.profile.bits()
                self._run_b2()
                if self.profile.bits() != old:
                    self.q_b = self.b2.q_profile
        q_s, self.m_a = solve_qs(ua_val, ub_val, fam, self.net.M, self.wa, self.wb,
                                 a_empty=not len(self.ua), b_empty=not len(self.ub))
        rec.update(U_A_opt=ua_val, U_B_opt=ub_val)
        return rec


def write_trace(fh, t0, pats, res):
    """Tab-separated decisions: t, m, BS, pattern bits, user, MI."""
    T, M, N = res.chosen.shape
    for i in range(T):
        for m in range(M):
            bits = to_bits(pats[i, m])
            for n in range(N):
                k = int(res.chosen[i, m, n])
                if k >= 0:
                    fh.write(f"{t0 + i}\t{m}\t{n}\t{bits}\t{k}\t{res.mi[i, m, n]!r}\n")


def _family(sim) -> UtilityFamily:
    return UtilityFamily(sim.utility, sim.alpha, sim.eps)


def _realized(values, idx, w, family) -> float:
    if not len(idx):
        return 0.0
    return float(np.sum(w[idx] * family.u(np.asarray(values)[idx])))


def run_proposed(state, graph, scenario, seed, n_sf, workers, trace=None):
    family = _family(scenario.simulation)
    w = np.ones(graph.n_users)
    bs = BaseStations(state, graph, scenario, family, w, seed, workers)
    rrms = Rrms(state, graph, scenario, family, w)
    delay = scenario.simulation.broadcast_delay
    current = rrms.control(0)
    pending = deque()
    records, controls = [], []
    rate_sum = np.zeros(graph.n_users)
    for T in range(n_sf):
        while pending and pending[0][0] <= T:
            current = LongTermControl.from_dict(pending.popleft()[1])
        ctrl = LongTermControl(T, current.M, current.m_a, current.q_a, current.profile,
                               current.q_b)
        controls.append(ctrl)
        if invariants.debug_enabled(scenario.simulation):
            invariants.check_control(ctrl)
        rep, res = bs.run(ctrl, trace)
        rate_sum += res.rate_sum
        # the report crosses the boundary as a plain dict
        opt = rrms.update(StatisticsReport.from_dict(rep.to_dict()))
        pending.append((T + 1 + delay, rrms.control(T + 1).to_dict()))
        r = np.asarray(rep.rate)
        records.append({
            "T": T, "q_s": ctrl.q_s, "m_a": ctrl.m_a, "q_a": ctrl.q_a,
            "pmf": ctrl.pmf().as_pairs(), "profile": ctrl.profile, "q_b": ctrl.q_b,
            "U_A": _realized(rep.realized_a, rrms.ua, w, family),
            "U_B": _realized(rep.realized_b, rrms.ub, w, family),
            "utility": float(np.sum(w * family.u(r))), **opt,
        })
    header = {"b2_theta": [list(map(int, v)) for v in rrms.b2.theta],
              "b2_history": rrms.b2.history, "b2_exact": rrms.b2.exact}
    return rate_sum, records, header, controls


def _run_policy(problem, state, graph, scenario, family, w, seed, policy, t0, T_total,
                workers, tracker=None, trace=None):
    net = scenario.network
    tracker = tracker or RateTracker(graph.n_users, 1, scenario.simulation.eps)
    L_S = net.superframe_len
    rate_sum = np.zeros(graph.n_users)
    per_sf = []
    t = t0
    while t < t0 + T_total:
        T = min(L_S, t0 + T_total - t)
        pats, pidx, mode, allowed = policy.inputs(t, T, net.M, graph.n_macro, graph.n_users)
        fad = np.stack([fading_block(seed, s, net.M, problem.n_links) for s in range(t, t + T)])
        res = run_superframe(problem, pats, pidx, fad, mode, allowed, w, family, tracker, workers)
        if trace is not None:
            write_trace(trace, t, pats, res)
        rate_sum += res.rate_sum
        per_sf.append(res.rate_sum / T)
        t += T
    return rate_sum, per_sf


def run_baseline(kind, state, graph, scenario, seed, n_sf, workers, trace=None):
    net, sim = scenario.network, scenario.simulation
    family = _family(sim)
    w = np.ones(graph.n_users)
    problem = build_problem(state, graph)
    header = {}
    if kind == "baseline1":
        policy = baselines.static_policy(state, graph, net.M, sim.baseline_blank_rate,
                                         sim.ffr_outer_percentile, sim.ffr_outer_fraction)
        header.update(ffr_outer_percentile=sim.ffr_outer_percentile,
                      ffr_outer_fraction=sim.ffr_outer_fraction, blanking_rate=policy.blanking_rate,
                      outer_users=int(policy.outer.sum()))
    else:
        pilot = sim.pilot_len or net.superframe_len
        pf = UtilityFamily("pf", 1.0, sim.eps)

        def pilot_utility(rate):
            rs, _ = _run_policy(problem, state, graph, scenario, family, w, seed,
                                baselines.dynamic_policy(rate), 0, pilot, workers)
            return float(np.sum(w * pf.u(rs / pilot)))

        rate, scores = baselines.select_rate(pilot_utility)
        policy = baselines.dynamic_policy(rate)
        header.update(blanking_rate=rate, pilot_len=pilot, pilot_utility=scores)
    L_S = net.superframe_len
    rate_sum, per_sf = _run_policy(problem, state, graph, scenario, family, w, seed, policy, 0,
                                   n_sf * L_S, workers, trace=trace)
    records = [{"T": T, "utility": float(np.sum(w * family.u(r)))} for T, r in enumerate(per_sf)]
    return rate_sum, records, header


def run_simulation(scenario: Scenario, algorithm: str = "proposed", seed=None, state=None,
                   graph=None, n_superframes=None, workers=None, trace=None) -> MetricsReport:
    """Simulate one scheme over the configured horizon and summarise it."""
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    net, sim = scenario.network, scenario.simulation
    seed = net.seed if seed is None else int(seed)
    if state is None or graph is None:
        state, graph = build_network(net, seed)
    n_sf = sim.n_superframes if n_superframes is None else int(n_superframes)
    if n_sf < 1:
        raise ConfigError("horizon shorter than one super-frame")
    workers = sim.workers if workers is None else workers
    if algorithm == "proposed":
        rate_sum, records, header, _ = run_proposed(state, graph, scenario, seed, n_sf, workers,
                                                    trace)
    else:
        rate_sum, records, header = run_baseline(algorithm, state, graph, scenario, seed, n_sf,
                                                 workers, trace)
    mean_rate = rate_sum / (n_sf * net.superframe_len)
    family = _family(sim)
    final = compute_metrics(mean_rate, graph, net.subband_hz, family)
    final["pf_utility"] = float(np.sum(UtilityFamily("pf", 1.0, sim.eps).u(mean_rate)))
    header.update(n_users=graph.n_users, n_bs=graph.n_bs,
                  n_macro=graph.n_macro, superframes=n_sf, superframe_len=net.superframe_len,
                  M=net.M, utility=sim.utility)
    return MetricsReport(algorithm, seed, records, final,
                         user_table(mean_rate, graph, net.subband_hz), header)
