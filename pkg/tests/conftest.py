import numpy as np
import pytest

from hetnet_abrb.config import NetworkConfig, Scenario, SimulationConfig
from hetnet_abrb.netmodel import LargeScaleState, build_network, fixture, topology_from_edges
from hetnet_abrb.utility import UtilityFamily


@pytest.fixture
def pf():
    return UtilityFamily("pf")


@pytest.fixture
def fig2():
    return fixture("fig2")


@pytest.fixture
def fig4():
    return fixture("fig4")


@pytest.fixture(scope="session")
def small_scenario():
    net = NetworkConfig(n_macro=3, picos_per_macro=2, users_per_macro=8, superframe_len=50)
    return Scenario(net, SimulationConfig(n_superframes=4))


@pytest.fixture(scope="session")
def small_network(small_scenario):
    return build_network(small_scenario.network, 3)


def random_topology(rng, n0=2, n_pico=2, n_users=7, p_extra=0.6, snr_db=(0.0, 20.0)):
    """Random explicit topology with noise-normalised SNRs (unit powers, unit noise)."""
    N = n0 + n_pico
    serving = rng.integers(0, N, n_users)
    edges = np.zeros((n_users, N), dtype=bool)
    edges[np.arange(n_users), serving] = True
    for k in range(n_users):
        if rng.random() < p_extra:
            edges[k, rng.integers(0, N)] = True
    g = topology_from_edges(n0, serving, edges)
    snr = 10.0 ** (rng.uniform(*snr_db, (n_users, N)) / 10.0)
    return LargeScaleState(snr, n0, np.ones(N), 1.0), g


def grid_utility_a(est, w, family, Q):
    """Type A objective at every row of ``Q`` (G x N0), straight from the closed form."""
    from hetnet_abrb.netmodel import MACRO_N, PICO_I

    g = est.graph
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    total = np.zeros(len(Q))
    for k in g.users_a:
        b = g.serving[k]
        e, eb = est.e[k], est.e_bar[k]
        if g.category[k] == MACRO_N:
            r = (1.0 - Q[:, b]) * e
        else:
            B = list(g.bs_set(b))
            z = Q[:, B].min(axis=1) if B else np.ones(len(Q))
            r = z * e if g.category[k] == PICO_I else z * (e - eb) + eb
        total += w[k] * family.u(np.maximum(r, 0.0))
    return total


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
