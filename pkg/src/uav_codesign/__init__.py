"""Joint sensing/communication/control co-design for multi-UAV networks."""

__version__ = "0.1.0"

from .control import (ControlError, PlantDerived, PlantSpec, StabilityError,
                      derive_plant, lqr_cost_from_throughput,
                      required_throughput, scaled_identity_plant,
                      simulate_lqg, solve_cost_riccati, solve_kalman_steady)
from .channel import (LinkState, channel_gain, fbl_rate, inverse_gaussian_q,
                      link_state, sinr, throughput_per_robot)
from .sensing import (FimSummary, fim_distances, fim_position, range_jacobian,
                      range_noise_variance)
from .objective import (Decision, ObjectiveBreakdown, check_decision,
                        evaluate, grad_positions, grad_power)
from .association import (PenaltyDcOptions, exhaustive_oracle,
                          round_and_repair, solve_association,
                          solve_relaxed_subproblem)
from .power import PgdOptions, project_capped_simplex, solve_power
from .positions import (ScaOptions, linearize_collision, sca_step,
                        solve_positions)
from .driver import SolveReport, recover_lqr_costs, solve
from .baselines import (equal_power, random_positioning, sensing_only,
                        water_filling)
from .montecarlo import RmseResult, localize_wls, rmse_experiment, simulate_ranges
from .scenario import (Geometry, ObjectiveWeights, RfParams, Scenario,
                       ScenarioError, db_to_linear, dbm_to_watts,
                       default_scenario, load_scenario, load_scenario_file,
                       random_positions, save_scenario)
