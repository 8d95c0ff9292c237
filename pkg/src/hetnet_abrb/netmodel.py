"""Network geometry, large-scale fading, cell selection and the topology graph.

Base stations are indexed ``0 .. N-1`` with macros first (``0 .. N0-1``) and
picos after. Users are indexed ``0 .. K-1``. External labels (the 1-based ids
used by fixture files) are kept on :class:`TopologyGraph` for I/O only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, NetworkConfig
from .rng import stream

MACRO_N, MACRO_I, PICO_N, PICO_I = 0, 1, 2, 3
CATEGORY_NAMES = {MACRO_N: "macro-N", MACRO_I: "macro-I", PICO_N: "pico-N", PICO_I: "pico-I"}

# axial directions of the six hexagonal neighbours
_HEX_DIRS = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


@dataclass(frozen=True)
class LargeScaleState:
    """Path gains ``sigma_sq[k, n]`` plus the geometry and powers behind them."""

    sigma_sq: np.ndarray
    n_macro: int
    power_mw: np.ndarray
    noise_mw: float
    bs_pos: Optional[np.ndarray] = None
    user_pos: Optional[np.ndarray] = None
    macro_axial: Optional[np.ndarray] = None
    macro_of_user: Optional[np.ndarray] = None

    def __post_init__(self):
        s = self.sigma_sq
        if s.ndim != 2 or s.shape[1] != len(self.power_mw):
            raise ValueError("sigma_sq must be K x N with one power per BS")
        if not np.all(s > 0):
            raise ValueError("path gains must be strictly positive")

    @property
    def n_users(self) -> int:
        return self.sigma_sq.shape[0]

    @property
    def n_bs(self) -> int:
        return self.sigma_sq.shape[1]

    @property
    def rx_mw(self) -> np.ndarray:
        """Long-term received power ``P_n sigma_{k,n}^2``."""
        return self.sigma_sq * self.power_mw[None, :]

    @property
    def snr(self) -> np.ndarray:
        return self.rx_mw / self.noise_mw


# --------------------------------------------------------------------------
# geometry


def hex_axial(n: int) -> list[tuple[int, int]]:
    """First ``n`` cells of a hexagonal spiral, centre first."""
    cells = [(0, 0)]
    ring = 1
    while len(cells) < n:
        q, r = ring * _HEX_DIRS[4][0], ring * _HEX_DIRS[4][1]
        for d in range(6):
            for _ in range(ring):
                cells.append((q, r))
                q += _HEX_DIRS[d][0]
                r += _HEX_DIRS[d][1]
        ring += 1
    return cells[:n]


def axial_to_xy(axial, isd: float) -> np.ndarray:
    a = np.asarray(axial, dtype=float).reshape(-1, 2)
    x = isd * (a[:, 0] + a[:, 1] / 2.0)
    y = isd * (math.sqrt(3.0) / 2.0) * a[:, 1]
    return np.column_stack([x, y])


def _in_hex(points: np.ndarray, isd: float) -> np.ndarray:
    """Points (relative to a site) inside that site's hexagonal cell."""
    dirs = axial_to_xy(_HEX_DIRS, isd) / isd
    proj = points @ dirs.T
    return np.all(proj <= isd / 2.0, axis=1)


def _sample_hex(rng, n: int, isd: float, min_r: float = 0.0) -> np.ndarray:
    out = np.empty((0, 2))
    radius = isd / math.sqrt(3.0)
    while len(out) < n:
        cand = rng.uniform(-radius, radius, size=(2 * n + 8, 2))
        keep = _in_hex(cand, isd) & (np.hypot(cand[:, 0], cand[:, 1]) >= min_r)
        out = np.vstack([out, cand[keep]])
    return out[:n]


def _sample_disk(rng, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def pathloss_db(d_m, intercept: float, slope: float, min_distance: float = 10.0):
    d_km = np.maximum(np.asarray(d_m, dtype=float), min_distance) / 1000.0
    return intercept + slope * np.log10(d_km)


def generate_topology(config: NetworkConfig, seed: Optional[int] = None) -> LargeScaleState:
    """Drop macros on a hex grid, picos and users inside each macro cell."""
    if seed is None:
        seed = config.seed
    rng = stream(seed, "topology")
    n0 = config.n_macro
    axial = np.array(hex_axial(n0), dtype=int)
    macro_xy = axial_to_xy(axial, config.inter_site_distance)

    if config.picos_poisson_mean is not None:
        n_pico = rng.poisson(config.picos_poisson_mean, size=n0)
    else:
        n_pico = np.full(n0, config.picos_per_macro)
    if config.users_poisson_mean is not None:
        n_user = rng.poisson(config.users_poisson_mean, size=n0)
    else:
        n_user = np.full(n0, config.users_per_macro)
    if n_user.sum() == 0:
        raise ConfigError("scenario has no users")

    pico_xy, pico_site = [], []
    for i in range(n0):
        pts = _sample_hex(rng, int(n_pico[i]), config.inter_site_distance,
                          config.pico_min_macro_distance)
        pico_xy.append(macro_xy[i] + pts)
        pico_site.extend([i] * len(pts))
    pico_xy = np.vstack(pico_xy) if pico_xy else np.empty((0, 2))
    pico_site = np.array(pico_site, dtype=int)

    user_xy, user_site = [], []
    for i in range(n0):
        nu = int(n_user[i])
        if nu == 0:
            continue
        local_picos = np.flatnonzero(pico_site == i)
        n_clu = int(round(config.clustered_fraction * nu)) if len(local_picos) else 0
        pts = _sample_hex(rng, nu - n_clu, config.inter_site_distance) + macro_xy[i]
        if n_clu:
            which = rng.integers(0, len(local_picos), size=n_clu)
            clu = pico_xy[local_picos[which]] + _sample_disk(rng, n_clu, config.cluster_radius)
            pts = np.vstack([clu, pts])
        user_xy.append(pts)
        user_site.extend([i] * nu)
    user_xy = np.vstack(user_xy)
    user_site = np.array(user_site, dtype=int)

    bs_xy = np.vstack([macro_xy, pico_xy])
    n_bs = len(bs_xy)
    d = np.hypot(user_xy[:, None, 0] - bs_xy[None, :, 0], user_xy[:, None, 1] - bs_xy[None, :, 1])
    pl = np.empty_like(d)
    pl[:, :n0] = pathloss_db(d[:, :n0], config.macro_pl_intercept, config.macro_pl_slope,
                             config.min_distance)
    pl[:, n0:] = pathloss_db(d[:, n0:], config.pico_pl_intercept, config.pico_pl_slope,
                             config.min_distance)
    shadow = stream(seed, "shadowing").normal(0.0, config.shadowing_std_db, size=d.shape)
    sigma_sq = 10.0 ** (-(pl + shadow) / 10.0)

    power = np.concatenate([np.full(n0, config.macro_power_dbm),
                            np.full(n_bs - n0, config.pico_power_dbm)])
    return LargeScaleState(
        sigma_sq=sigma_sq,
        n_macro=n0,
        power_mw=dbm_to_mw(power),
        noise_mw=float(dbm_to_mw(config.noise_dbm)),
        bs_pos=bs_xy,
        user_pos=user_xy,
        macro_axial=axial,
        macro_of_user=user_site,
    )


def cell_selection(state: LargeScaleState, config: NetworkConfig) -> np.ndarray:
    """Range-expanded association: pico wins when ``beta * P_p s_p >= P_m s_m``."""
    rx = state.rx_mw
    n0 = state.n_macro
    best_m = np.argmax(rx[:, :n0], axis=1)
    if state.n_bs == n0:
        return best_m.astype(int)
    best_p = n0 + np.argmax(rx[:, n0:], axis=1)
    k = np.arange(state.n_users)
    beta = 10.0 ** (config.bias_db / 10.0)
    pico = beta * rx[k, best_p] >= rx[k, best_m]
    return np.where(pico, best_p, best_m).astype(int)


# --------------------------------------------------------------------------
# topology graph


@dataclass(frozen=True, eq=False)
class TopologyGraph:
    """Bipartite BS-user graph with N/I and Type A/B classification."""

    n_macro: int
    serving: np.ndarray
    edges: np.ndarray  # bool, K x N
    bs_labels: tuple = ()
    user_labels: tuple = ()
    category: np.ndarray = field(init=False)
    pico_macro_set: tuple = field(init=False)

    def __post_init__(self):
        K, N = self.edges.shape
        object.__setattr__(self, "serving", np.asarray(self.serving, dtype=int))
        if not self.bs_labels:
            object.__setattr__(self, "bs_labels", tuple(range(N)))
        if not self.user_labels:
            object.__setattr__(self, "user_labels", tuple(range(K)))
        if not np.all(self.edges[np.arange(K), self.serving]):
            raise ValueError("every user needs an edge to its serving BS")
        deg = self.edges.sum(axis=1)
        macro_served = self.serving < self.n_macro
        iuser = deg > 1
        cat = np.where(macro_served, np.where(iuser, MACRO_I, MACRO_N),
                       np.where(iuser, PICO_I, PICO_N))
        object.__setattr__(self, "category", cat.astype(int))
        sets = []
        for n in range(N):
            if n < self.n_macro:
                sets.append(())
                continue
            members = np.flatnonzero((self.serving == n) & iuser)
            union = set()
            for k in members:
                union.update(self.macro_neighbors(k))
            sets.append(tuple(sorted(union)))
        object.__setattr__(self, "pico_macro_set", tuple(sets))

    @property
    def n_users(self) -> int:
        return self.edges.shape[0]

    @property
    def n_bs(self) -> int:
        return self.edges.shape[1]

    def macro_neighbors(self, k) -> tuple:
        row = self.edges[k, : self.n_macro].copy()
        if self.serving[k] < self.n_macro:
            row[self.serving[k]] = False
        return tuple(int(n) for n in np.flatnonzero(row))

    def pico_neighbors(self, k) -> tuple:
        row = self.edges[k].copy()
        row[: self.n_macro] = False
        row[self.serving[k]] = False
        return tuple(int(n) for n in np.flatnonzero(row))

    def served(self, n) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(self.serving == n))

    def is_nuser(self, k) -> bool:
        return self.category[k] in (MACRO_N, PICO_N)

    @property
    def type_b(self) -> np.ndarray:
        return self.category == MACRO_I

    @property
    def users_a(self) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(~self.type_b))

    @property
    def users_b(self) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(self.type_b))

    def pico_iusers(self, n) -> tuple:
        return tuple(int(k) for k in np.flatnonzero((self.serving == n) & (self.category == PICO_I)))

    def bs_set(self, n) -> tuple:
        """``B_n``: interfering macros of pico ``n`` (empty for macros)."""
        return self.pico_macro_set[n]

    def assumption3_holds(self) -> bool:
        for n in range(self.n_macro, self.n_bs):
            sets = {self.macro_neighbors(k) for k in self.pico_iusers(n)}
            if len(sets) > 1:
                return False
        return True

    def links(self) -> np.ndarray:
        """All edges as ``(k, n)`` rows, sorted by user then BS."""
        k, n = np.nonzero(self.edges)
        return np.column_stack([k, n])


def topology_from_edges(n_macro, serving, edges, bs_labels=(), user_labels=(),
                        enforce_assumption3=True) -> TopologyGraph:
    edges = np.array(edges, dtype=bool)
    serving = np.asarray(serving, dtype=int)
    K = edges.shape[0]
    edges[np.arange(K), serving] = True
    g = TopologyGraph(n_macro, serving, edges, tuple(bs_labels), tuple(user_labels))
    if enforce_assumption3:
        g = enforce_common_neighbors(g)
    return g


def enforce_common_neighbors(g: TopologyGraph) -> TopologyGraph:
    """Give every I-user of a pico the union of its cell's interfering macros."""
    edges = g.edges.copy()
    for n in range(g.n_macro, g.n_bs):
        union = g.bs_set(n)
        for k in g.pico_iusers(n):
            edges[k, list(union)] = True
    if np.array_equal(edges, g.edges):
        return g
    return TopologyGraph(g.n_macro, g.serving, edges, g.bs_labels, g.user_labels)


def build_topology_graph(state: LargeScaleState, serving, config: NetworkConfig) -> TopologyGraph:
    rx = state.rx_mw
    thr = 10.0 ** (config.edge_threshold_db / 10.0) * state.noise_mw
    edges = rx >= thr
    if config.edge_sir_db is not None:
        direct = rx[np.arange(state.n_users), serving]
        edges &= rx >= direct[:, None] * 10.0 ** (-config.edge_sir_db / 10.0)
    return topology_from_edges(state.n_macro, serving, edges)


def build_network(config: NetworkConfig, seed: Optional[int] = None):
    state = generate_topology(config, seed)
    serving = cell_selection(state, config)
    return state, build_topology_graph(state, serving, config)


# --------------------------------------------------------------------------
# small-scale fading


@dataclass(frozen=True)
class ChannelSample:
    """``|h_{m,k,n}|^2`` for one subband; zero off the edge set."""

    gain_sq: np.ndarray


def fading_block(seed: int, t: int, M: int, n_links: int) -> np.ndarray:
    """Unit-mean exponential fading for every (subband, link) of subframe ``t``."""
    return stream(seed, "fading", t).standard_exponential((M, n_links))


def sample_small_scale(state: LargeScaleState, graph: TopologyGraph, m: int,
                       seed: int, t: int, M: Optional[int] = None) -> ChannelSample:
    links = graph.links()
    M = M if M is not None else m + 1
    x = fading_block(seed, t, M, len(links))[m]
    gain = np.zeros_like(state.sigma_sq)
    gain[links[:, 0], links[:, 1]] = state.sigma_sq[links[:, 0], links[:, 1]] * x
    return ChannelSample(gain)


# --------------------------------------------------------------------------
# explicit-graph fixture format


def load_fixture(source) -> tuple[LargeScaleState, TopologyGraph]:
    """Read an explicit topology (JSON text, path, or already-parsed dict).

    Schema::

        {"base_stations": [{"id": 1, "tier": "macro", "power_dbm": 0.0}, ...],
         "users": [{"id": 1, "serving": 1}, ...],
         "edges": [{"bs": 1, "user": 5, "snr_db": 10.0}, ...],
         "noise_dbm": 0.0}

    ``snr_db`` is the long-term received SNR ``P_n sigma^2 / noise`` of the
    link; it defaults to 20 dB on serving links and 10 dB otherwise.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        doc = json.loads(text)
    bss = doc["base_stations"]
    macros = [b for b in bss if b["tier"] == "macro"]
    picos = [b for b in bss if b["tier"] == "pico"]
    if len(macros) + len(picos) != len(bss) or not macros:
        raise ConfigError("every BS needs tier 'macro' or 'pico' and at least one macro")
    ordered = macros + picos
    bs_index = {b["id"]: i for i, b in enumerate(ordered)}
    users = doc["users"]
    if not users:
        raise ConfigError("fixture has no users")
    user_index = {u["id"]: i for i, u in enumerate(users)}
    K, N = len(users), len(ordered)
    noise_mw = float(dbm_to_mw(doc.get("noise_dbm", 0.0)))
    power = dbm_to_mw([b.get("power_dbm", 0.0) for b in ordered])
    serving = np.array([bs_index[u["serving"]] for u in users], dtype=int)
    edges = np.zeros((K, N), dtype=bool)
    snr_db = np.full((K, N), -300.0)
    for e in doc.get("edges", []):
        k, n = user_index[e["user"]], bs_index[e["bs"]]
        edges[k, n] = True
        default = 20.0 if serving[k] == n else 10.0
        snr_db[k, n] = e.get("snr_db", default)
    for k in range(K):
        if not edges[k, serving[k]]:
            edges[k, serving[k]] = True
            snr_db[k, serving[k]] = 20.0
    sigma_sq = 10.0 ** (snr_db / 10.0) * noise_mw / power[None, :]
    state = LargeScaleState(sigma_sq, len(macros), power, noise_mw)
    graph = topology_from_edges(len(macros), serving, edges,
                                bs_labels=[b["id"] for b in ordered],
                                user_labels=[u["id"] for u in users])
    return state, graph


def dump_fixture(state: LargeScaleState, graph: TopologyGraph) -> dict:
    tiers = ["macro"] * graph.n_macro + ["pico"] * (graph.n_bs - graph.n_macro)
    snr_db = 10.0 * np.log10(state.snr)
    return {
        "base_stations": [
            {"id": graph.bs_labels[n], "tier": tiers[n],
             "power_dbm": float(10.0 * np.log10(state.power_mw[n]))}
            for n in range(graph.n_bs)
        ],
        "users": [{"id": graph.user_labels[k], "serving": graph.bs_labels[graph.serving[k]]}
                  for k in range(graph.n_users)],
        "edges": [{"bs": graph.bs_labels[n], "user": graph.user_labels[k],
                   "snr_db": float(snr_db[k, n])} for k, n in graph.links()],
        "noise_dbm": float(10.0 * np.log10(state.noise_mw)),
    }


FIG2_FIXTURE = {
    "base_stations": [
        {"id": 1, "tier": "macro"},
        {"id": 2, "tier": "macro"},
        {"id": 3, "tier": "pico"},
    ],
    "users": [
        {"id": 1, "serving": 1},
        {"id": 2, "serving": 2},
        {"id": 3, "serving": 3},
        {"id": 4, "serving": 3},
        {"id": 5, "serving": 2},
    ],
    "edges": [
        {"bs": 1, "user": 1}, {"bs": 1, "user": 5},
        {"bs": 2, "user": 2}, {"bs": 2, "user": 4}, {"bs": 2, "user": 5},
        {"bs": 3, "user": 3}, {"bs": 3, "user": 4},
    ],
}

# three macros, four macro I-users; user 2 reaches every macro, users 3 and 4
# share macro 3, user 1 only leaks into macro 2
FIG4_FIXTURE = {
    "base_stations": [
        {"id": 1, "tier": "macro"},
        {"id": 2, "tier": "macro"},
        {"id": 3, "tier": "macro"},
    ],
    "users": [
        {"id": 1, "serving": 1},
        {"id": 2, "serving": 2},
        {"id": 3, "serving": 3},
        {"id": 4, "serving": 3},
    ],
    "edges": [
        {"bs": 1, "user": 1}, {"bs": 2, "user": 1},
        {"bs": 1, "user": 2}, {"bs": 2, "user": 2}, {"bs": 3, "user": 2},
        {"bs": 2, "user": 3}, {"bs": 3, "user": 3},
        {"bs": 2, "user": 4}, {"bs": 3, "user": 4},
    ],
}


def fixture(name: str):
    docs = {"fig2": FIG2_FIXTURE, "fig4": FIG4_FIXTURE}
    if name not in docs:
        raise KeyError(f"unknown fixture {name!r}")
    return load_fixture(docs[name])
