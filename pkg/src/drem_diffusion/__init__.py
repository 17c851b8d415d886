"""Distributed parameter estimation with DREM and diffusion over time-varying digraphs."""

from .analysis import (ISOLATED, AggregateTrace, Problem, TrialTrace, lyapunov, run_monte_carlo,
                       run_trial, simulate)
from .drem import DremBank, DremWindow, adjugate, determinant
from .estimator import ATC, CTA, EstimatorState, StepsizeSchedule, atc_step, cta_step, step
from .excitation import ExcitationReport, cooperative_pe_scan
from .graph import (TopologySchedule, WeightedDigraph, is_jointly_connected, is_strongly_connected,
                    periodic_schedule, transition_matrix, union_graph, validate)
from .model import RegressionModel
from .scenario import BUILTINS, ScenarioConfig, ScenarioError, check, load_scenario, run

__version__ = "0.1.0"
