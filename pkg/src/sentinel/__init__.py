"""Hostility scoring for objects inside a monitored area of observation."""

__version__ = "0.1.0"

from .dataset import (
    DatasetMeta,
    FullPermutations,
    Location,
    NormalizedDataset,
    Observation,
    RawDataset,
    SampledPermutations,
    normalize,
    scale_coordinates,
    split,
)
from .mlp import Network, NetworkConfig, TrainConfig, init, predict, train_early_stop
from .netbank import ModelRecord, NetworkBank
from .simulator import Scenario, ScenarioSpec, generate_scenario, run_headless

__all__ = [
    "DatasetMeta",
    "FullPermutations",
    "Location",
    "ModelRecord",
    "Network",
    "NetworkBank",
    "NetworkConfig",
    "NormalizedDataset",
    "Observation",
    "RawDataset",
    "SampledPermutations",
    "Scenario",
    "ScenarioSpec",
    "TrainConfig",
    "generate_scenario",
    "init",
    "normalize",
    "predict",
    "run_headless",
    "scale_coordinates",
    "split",
    "train_early_stop",
]
