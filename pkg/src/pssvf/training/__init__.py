from .ars import ARS, ars_update, train_ars
from .common import METRICS_COLUMNS, MetricsRow, TrainingDivergedError, evaluate_policy, policy_spec_for
from .experiments import (ablate, ablation_model, ascend, clone_from_probing_states,
                          collect_capped_dataset, final_return, offline_improvement,
                          zero_shot_transfer)
from .pssvf import PSSVF, train_pssvf

__all__ = [
    "ARS", "METRICS_COLUMNS", "MetricsRow", "PSSVF", "TrainingDivergedError", "ablate",
    "ablation_model", "ars_update", "ascend", "clone_from_probing_states",
    "collect_capped_dataset", "evaluate_policy", "final_return", "offline_improvement",
    "policy_spec_for", "train_ars", "train_pssvf", "zero_shot_transfer",
]
