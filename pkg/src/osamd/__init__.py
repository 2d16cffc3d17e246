"""Online self-adaptive mirror descent for classification under continual shift.

Submodules: :mod:`~osamd.geometry`, :mod:`~osamd.losses`,
:mod:`~osamd.learners`, :mod:`~osamd.environments`, :mod:`~osamd.metrics`
and :mod:`~osamd.harness`.
"""
from .environments import (
    CsvStreamConfig,
    LabelFlipConfig,
    MulticlassRotatingConfig,
    RotatingGaussianConfig,
    iter_stream,
)
from .geometry import EUCLIDEAN, BregmanGeometry
from .harness import ConfigError, emit_results, load_config, run_experiment
from .learners import (
    LabelOracle,
    MosamdState,
    OmdState,
    OsamdParams,
    OsamdState,
    PaaState,
    mosamd_round,
    omd_round,
    osamd_round,
    paa_round,
)
from .losses import HingeSpec
from .metrics import RunRecord, aggregate_runs, dynamic_regret

__version__ = "0.1.0"
