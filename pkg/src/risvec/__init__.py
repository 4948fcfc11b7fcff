"""RIS placement and task-offloading toolkit for multi-server vehicular edge
computing: cascaded channel model, probabilistic completion feasibility, exact
capacitated task assignment and placement search."""

from .assignment import (Assignment, AssignmentProblem, average_throughput,
                         brute_force_oracle, solve_greedy_nearest, solve_optimal)
from .channel import (LinkGeometry, LinkState, array_factor_ratio,
                      cascaded_rx_power_los, elevation_angle_deg, link_geometry,
                      link_rate, los_probability, radiation_pattern, state_weight)
from .evaluator import PlacementEvaluator
from .feasibility import (LinkBudget, completion_probability_exact,
                          completion_probability_mc, compute_latency,
                          feasibility_mask, grid_budget, link_budget,
                          uploadable_data)
from .metrics_io import (ExperimentRecord, SurfacePoint, read_records, read_surface,
                         write_records, write_run_summary, write_surface)
from .mobility import GridPath, grid_path
from .placement import (FeasibleSet, GaParams, HcParams, PlacementResult,
                        build_evaluator, evaluate_placement, genetic_search,
                        greedy_offload_placement, grid_search, hill_climb,
                        sumrate_placement, sweep_grid)
from .scenario import (ConfigError, Instance, Lane, Placement, PlacementBounds,
                       RoadGeometry, ScenarioConfig, Server, SystemParams, TaskSpec,
                       Vehicle, config_from_dict, default_config_path,
                       equidistant_servers, generate_instances, load_config,
                       load_trace, write_trace)

__version__ = "0.1.0"
