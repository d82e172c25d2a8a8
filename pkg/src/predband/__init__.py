"""Prediction bands by width-minimising aggregation of candidate estimators.

The main pipeline fits candidate width functions on a pre-training split,
aggregates them into the narrowest band that covers every point of an
optimisation split, and shrinks that band to level 1 - alpha on an adjustment
split.
"""

from .baselines import fit_kernel_sdp, fit_lqr, fit_split_conformal
from .calibration import CalibrationError, CalibrationResult, calibrate, calibrate_lambda
from .config import ConfigError, ExperimentConfig, parse_config, serialize_config
from .convex import PsdProgram, QcProgram, SolverError, solve_psd, solve_qc
from .estimators import (DEFAULT_MENU, EstimatorSpec, build_width_candidates, constant_candidate,
                         fit_kernel_second_moment, fit_mean_ridge, fit_quantile_candidate)
from .evaluation import (EvalReport, EvalRow, average_width, coverage, render_svg_band, run_experiment,
                         write_report_csv)
from .lp import LpProblem, LpSolution, LpStalledError, solve_lp
from .model import (BandModel, CandidateFunction, ConstantWidthBand, Dataset, FeatureMap, PredictionInterval,
                    SplitPlan, TwoSidedBand, evaluate_candidate, predict_interval, split_dataset)
from .rng import SplitMix64, rng_next_uniform
from .synthetic import SetupSpec, generate, oracle_functions, parse_setup
from .theory_oracle import FiniteDistribution, population_fm, population_optimal_band, verify_lemmas
from .utopia import (InfeasibleAggregation, aggregate_asymmetric, aggregate_one_step, aggregate_two_step,
                     scale_single)

__version__ = "0.1.0"
