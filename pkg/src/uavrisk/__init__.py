"""Pre-flight battery-depletion risk assessment for multirotor UAVs.

Simulates a planned trajectory under stochastic wind and dynamics
noise, predicts per-timestep power with a learned or analytical model,
and reports tail risk (CVaR) of a user-defined depletion profile.
"""

from .errors import (ComputationError, ConfigError, FitError, InputError,
                     LoadError, PlanningError, SamplingError, UavRiskError)
from .flight import (ContextFeatures, FeatureFrame, ProcessedFlight,
                     TrajectoryPlan, VehicleState, Waypoint, derive_features,
                     derive_feature_matrix,
                     read_flight_csv, validate_flight, write_flight_csv)
from .power import (AnalyticalCoefficients, ResidualBlock, TcnWeights,
                    analytical_predict, fit_analytical, load_coefficients,
                    load_weights, save_coefficients, save_weights,
                    tcn_forward, predict_power_series)
from .wind import (DrydenState, InletDistribution, InletSample, WindFieldSet,
                   WindGrid, dryden_step, lookup_wind, read_wind_grid,
                   sample_inlet, write_wind_grid)
from .dynamics import (ControllerConfig, DynamicsNoise, FlightResult,
                       SimConfig, plan_time_estimate, simulate_flight)
from .montecarlo import (EnergySamples, McConfig, energy_histogram,
                         export_energy_samples, run_mc)
from .risk import (RiskProfile, RiskSamples, cvar, risk_histogram,
                   risk_transform, var, write_risk_report)
from .metrics import FlightEvaluation, adjusted_re, mape, segment_by_yaw
from .coverage import (CoverageMission, CoverageResult, OccupancyMap,
                       coverage_map, plan_path, read_occupancy_pgm,
                       sample_goals, write_occupancy_pgm)

__version__ = "0.1.0"
