"""Symbolic fault diagnosis learned from normal-behavior time series.

The pipeline discretizes multivariate signals into observational states with
a categorical variational autoencoder, thresholds the model likelihood into
binary residual states, mines state -> residual implication rules, completes
them with health-component knowledge, and diagnoses anomalous runs by SAT
solving with conflict extraction and minimal hitting sets.
"""

from .data import (
    Standardizer,
    TimeSeries,
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    load_csv,
    save_csv,
    split_train_val,
)
from .tank import TankScenario, anomaly_sequence, generate_property1, generate_property2, normal_sequence, simulate
from .catvae import CatVaeConfig, CatVaeModel, elbo_loss, gumbel_softmax_sample, infer
from .gmm import GmmModel, fit_em, gmm_assign
from .discretize import Discretizer, SymbolSequence, discretize_run, state_histogram
from .mining import CandidateRule, build_transactions, fp_growth, generate_rules
from .kb import HealthMap, Observation, Rule, RuleBase, complete_rules, encode_cnf
from .sat import ClauseSet, all_minimal_conflicts, minimal_hitting_sets, solve
from .diagnosis import DiagnosisResult, diagnose

__version__ = "0.1.0"
