"""Network codes with shared-secret packet authentication for adversarial networks."""

from .errors import AdvnetError, ConfigurationError, DecodeFailure, NetworkFormatError, UsageError
from .galois import FieldElement, FieldParams, slp_eval, slp_hash
from .topology import (
    Edge,
    General,
    Network,
    NodeBased,
    adversary_sets,
    load_network,
    min_cut,
    parse_network,
    residual_rate,
    toy_network,
)
from .secretcode import CodeParams, Packet, derive_params, run_network
from .adversary import STRATEGIES, strategy_from_name, symmetrize_transcripts
from .harness import TrialConfig, monte_carlo, run_experiment, run_trial, theorem1_params

__all__ = [
    "AdvnetError", "ConfigurationError", "DecodeFailure", "NetworkFormatError", "UsageError",
    "FieldElement", "FieldParams", "slp_eval", "slp_hash", "Edge", "General", "Network",
    "NodeBased", "adversary_sets", "load_network", "min_cut", "parse_network", "residual_rate",
    "toy_network", "CodeParams", "Packet", "derive_params", "run_network", "STRATEGIES",
    "strategy_from_name", "symmetrize_transcripts", "TrialConfig", "monte_carlo", "run_experiment",
    "run_trial", "theorem1_params",
]

__version__ = "0.1.0"
