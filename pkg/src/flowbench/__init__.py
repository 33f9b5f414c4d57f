"""flowbench: do next-event predictors learn process-model structure?

Play out a Petri net into an event log, hold out whole control-flow
variants, train an autoregressive next-event predictor on the rest,
simulate a log from it, and measure how much of the original behaviour
(seen and unseen) the simulation reproduces.
"""

from .benchmarks import MODEL_IDS, build_model, catalogue_variants
from .eventlog import (
    BOS,
    EOS,
    PAD,
    EventLog,
    PrefixSample,
    Vocabulary,
    build_vocabulary,
    occ,
    prefixes,
    read_log,
    variants,
    write_log,
)
from .harness import ExperimentConfig, SplitSpec, grid_search, run_experiment
from .metrics import MetricsReport, evaluate, fitness, generalisation, precision
from .petrinet import (
    PetriNet,
    PlayoutConfig,
    Transition,
    enabled,
    enumerate_variants,
    fire,
    load_net,
    playout,
    save_net,
)
from .predictor import (
    PredictorConfig,
    TrainedPredictor,
    load_predictor,
    markov_baseline,
    predict_next,
    save_predictor,
    simulate_log,
    train,
)
from .split import (
    LogPartition,
    leave_fraction_out,
    lovocv_splits,
    partition_by_variants,
    validation_split,
)

__version__ = "0.1.0"

__all__ = [
    "BOS",
    "EOS",
    "PAD",
    "EventLog",
    "ExperimentConfig",
    "LogPartition",
    "MetricsReport",
    "MODEL_IDS",
    "PetriNet",
    "PlayoutConfig",
    "PredictorConfig",
    "PrefixSample",
    "SplitSpec",
    "TrainedPredictor",
    "Transition",
    "Vocabulary",
    "build_model",
    "build_vocabulary",
    "catalogue_variants",
    "enabled",
    "enumerate_variants",
    "evaluate",
    "fire",
    "fitness",
    "generalisation",
    "grid_search",
    "leave_fraction_out",
    "load_net",
    "load_predictor",
    "lovocv_splits",
    "markov_baseline",
    "occ",
    "partition_by_variants",
    "playout",
    "precision",
    "predict_next",
    "prefixes",
    "read_log",
    "run_experiment",
    "save_net",
    "save_predictor",
    "simulate_log",
    "train",
    "validation_split",
    "variants",
    "write_log",
]
