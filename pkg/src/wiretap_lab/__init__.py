"""Secrecy capacity, random-binning simulation and bound checks for the
wiretap channel whose eavesdropper taps a chosen subset of positions."""
from .adversary import SubsetSpec, enumerate_subsets, observation_channel, wiretap2_observation_channel
from .binning import (
    BinningConfig,
    ProtocolInstance,
    leakage_divergence,
    make_instance,
    max_leakage,
    select_public_index,
    slepian_wolf_error,
    tv_key_uniformity,
)
from .bounds import BoundReport, GammaConfig, SanovConfig, run_verify_suite
from .capacity import (
    AuxiliaryInput,
    CapacityResult,
    OptimizerConfig,
    WiretapModel,
    eq2_objective,
    exhaustive_grid_capacity,
    optimize_capacity,
    secrecy_objective,
    secrecy_objective_alt,
    sweep_alpha,
)
from .errors import WiretapLabError
from .finite_prob import (
    Channel,
    Distribution,
    JointDistribution,
    conditional_mutual_information,
    entropy,
    kl_divergence,
    mutual_information,
    total_variation,
)
from .modelfile import ModelFile, parse_model

__version__ = "0.1.0"
