"""Synthetic psychiatric questionnaire tables: generation and evaluation."""

from .fidelity import (
    FidelityReport,
    cramers_v_bias_corrected,
    energy_distance_sq,
    evaluate_fidelity,
    jsd,
    mae_v,
    mean_jsd,
)
from .privacy import (
    PrivacyReport,
    evaluate_privacy,
    exact_overlap,
    k_map_risk,
    near_match_share,
    nn_distances,
    quantile,
)
from .resampling import DeltaEstimate, bootstrap_delta, metric_ci
from .selection import CandidateRecord, CandidateScores, GateConfig, score_candidate, select
from .tabular import (
    CategoricalTable,
    DisorderSchema,
    EmpiricalPMF,
    empirical_pmf,
    load_schema,
    load_table,
    save_table,
    stratified_split,
)

__version__ = "0.1.0"
