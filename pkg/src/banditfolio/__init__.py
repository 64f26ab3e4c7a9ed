"""Risk-aware sequential portfolio selection: UCB1 bandits blended with CVaR minimisation."""

from .bandit import RewardScaler, UcbState, ucb1_select, ucb1_regret_bound
from .cvar import CvarProblem, build_lp, empirical_cvar, empirical_var, minimize_cvar, solve_lp
from .engine import EngineConfig, combine, run, wealth_curve
from .experiment import ExperimentConfig, emit_report, run_experiment
from .gbm import GbmParams, cholesky, simulate_paths
from .ingest import PriceSeries, ReturnMatrix, load_prices, split_history, to_log_returns
from .market_graph import (
    correlation_matrix,
    distance_matrix,
    filter_assets,
    minimum_spanning_tree,
    select_peripheral,
)

__version__ = "0.1.0"
