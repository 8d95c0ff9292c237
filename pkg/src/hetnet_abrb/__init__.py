"""Two-timescale almost-blank resource block control for two-tier HetNets."""
from .abrb import AbrbProfile, ProfilePmf, SynchronousAbrbPmf, synchronous_pmf
from .config import ConfigError, NetworkConfig, Scenario, SimulationConfig, load_scenario
from .graph_b import build_interference_graph, enumerate_mis, max_weight_independent_set
from .harness import run_simulation
from .kernel import KERNEL_BACKEND
from .metrics import MetricsReport
from .netmodel import build_network, fixture
from .opt_a import solve_qa
from .opt_b import algorithm_b2, solve_qb, solve_qcheck
from .utility import UtilityFamily, solve_qs

__version__ = "0.1.0"

__all__ = [
    "AbrbProfile", "ConfigError", "KERNEL_BACKEND", "MetricsReport", "NetworkConfig",
    "ProfilePmf", "Scenario", "SimulationConfig", "SynchronousAbrbPmf", "UtilityFamily",
    "algorithm_b2", "build_interference_graph", "build_network", "enumerate_mis", "fixture",
    "load_scenario", "max_weight_independent_set", "run_simulation", "solve_qa", "solve_qb",
    "solve_qcheck", "solve_qs", "synchronous_pmf",
]
