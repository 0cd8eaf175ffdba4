"""Column-generation planning and plan-guided online bin packing."""

from .model import (
    Bin, Instance, ItemType, PackingSolution, Pattern, Placement, Plan, PlanEntry,
    fill_rate, read_instance, validate_pattern, write_instance,
)
from .lp import LpResult, RmpLp, solve_rmp_lp
from .pricing import PricingResult, solve_pricing
from .planner import PlannerConfig, generate_plan, initial_patterns, solve_integer_plan, solve_offline
from .estimator import MemoryWindow, estimate_distribution, forecast_demands, kl_divergence
from .policies import DEFAULT_PARAMS, LARGE_SCALE_PARAMS, PolicyParams, run_policy
from .generators import DistributionSpec, load_preset, sample_instance
from .bounds import exact_solve, l1_lower_bound, l2_lower_bound

__version__ = "0.1.0"
