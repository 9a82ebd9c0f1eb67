"""Near-field XL-IRS deployment study: channels, beamforming and sweeps."""

from .channel import BeamformingState, NearFieldChannels, channels_for, effective_channels, sum_rate, synthesize
from .geometry import ApertureReport, ArrayLayout, ScenarioConfig, aperture_report, build_layout
from .multi_user import ScaTrace, sca_ao_multi_user
from .single_user import AoTrace, ao_single_user
from .spectral import SnrEstimates, SpectralSummary, snr_closed_forms, spectral_summary

__version__ = "0.1.0"

__all__ = [
    "ApertureReport",
    "AoTrace",
    "ArrayLayout",
    "BeamformingState",
    "NearFieldChannels",
    "ScaTrace",
    "ScenarioConfig",
    "SnrEstimates",
    "SpectralSummary",
    "ao_single_user",
    "aperture_report",
    "build_layout",
    "channels_for",
    "effective_channels",
    "sca_ao_multi_user",
    "snr_closed_forms",
    "spectral_summary",
    "sum_rate",
    "synthesize",
]
