"""cfris: joint per-AP beamforming and reciprocal beyond-diagonal scattering
surface design for cell-free multi-user MIMO downlinks."""

from .beamformer import BeamformerSet, FPResult, fp_optimize, mmse_init
from .channel import ChannelSet, LinkKind, LinkSpec, assemble_equivalent, draw_channel_set
from .config import ScenarioConfig, parse_config
from .metrics import RateReport, sum_rate
from .runner import SweepSpec, TrialResult, run_campaign, run_trial
from .scattering import Architecture, ScatteringState, init_scattering, riemannian_ascent

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "BeamformerSet",
    "ChannelSet",
    "FPResult",
    "LinkKind",
    "LinkSpec",
    "RateReport",
    "ScatteringState",
    "ScenarioConfig",
    "SweepSpec",
    "TrialResult",
    "assemble_equivalent",
    "draw_channel_set",
    "fp_optimize",
    "init_scattering",
    "mmse_init",
    "parse_config",
    "riemannian_ascent",
    "run_campaign",
    "run_trial",
    "sum_rate",
]
