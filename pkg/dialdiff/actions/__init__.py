from dialdiff.actions.common_actions import show_config_action
from dialdiff.actions.data_actions import gen_data_action, prep_action, train_classifier_action
from dialdiff.actions.eval_actions import ablate_action, eval_action
from dialdiff.actions.model_actions import sample_action, train_action

__all__ = [
    "ablate_action",
    "eval_action",
    "gen_data_action",
    "prep_action",
    "sample_action",
    "show_config_action",
    "train_action",
    "train_classifier_action",
]
