from .evaluate import (
    ConfusionMatrix,
    EvalResult,
    LabeledInstance,
    cross_validate,
    instances_from_entries,
    label_entries,
    prf,
    project_to_class,
    undersample,
)
from .models import ALGORITHMS, register_algorithm, train

__all__ = [
    "ConfusionMatrix",
    "EvalResult",
    "LabeledInstance",
    "ALGORITHMS",
    "cross_validate",
    "instances_from_entries",
    "label_entries",
    "prf",
    "project_to_class",
    "register_algorithm",
    "train",
    "undersample",
]
