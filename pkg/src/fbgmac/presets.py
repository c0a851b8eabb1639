"""Named channel scenarios shared by the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

from .model import ChannelParams, DomainError


@dataclass(frozen=True)
class Preset:
    """A channel scenario, the regions drawn for it and the scheme simulated on it."""

    name: str
    params: ChannelParams
    regions: tuple
    scheme: str
    rho: float
    rate_fraction: float


PRESETS = {
    "fig8": Preset("fig8", ChannelParams(p1=1.0, p2=1.2, sigma1_sq=0.1, sigma2_sq=3.0),
                   ("gmac_feedback", "outer_gmac_wt", "gmac"), "ozarow", 0.0, 0.8),
    "fig10": Preset("fig10", ChannelParams(p1=10.0, p2=3.0, sigma1_sq=10.0, sigma2_sq=20.0, q=5.0),
                    ("gmac_feedback", "outer_gmac_wt", "gmac"), "rosenzweig_ncsit", 0.0, 0.7),
    "fig13": Preset("fig13", ChannelParams(p1=1.0, p2=1.5, sigma1_sq=0.1, sigma2_sq=1.2),
                    ("gmac_dms", "outer_gmac_dms"), "twostep_dms", 0.5, 0.8),
    "figNcsitDms": Preset("figNcsitDms",
                          ChannelParams(p1=10.0, p2=3.0, sigma1_sq=10.0, sigma2_sq=20.0, q=5.0),
                          ("outer_ncsit_dms", "gmac_dms"), "hybrid_ncsit_dms", 0.5, 0.7),
}

#: for each preset, (feedback secrecy region, no-feedback comparator it must exceed)
FEEDBACK_GAIN = {
    "fig8": ("gmac_feedback", "outer_gmac_wt"),
    "fig10": ("gmac_feedback", "gmac"),
    "fig13": ("gmac_dms", "outer_gmac_dms"),
    "figNcsitDms": ("gmac_dms", "outer_ncsit_dms"),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
