"""Exact ergodic capacity of dual-hop decode-and-forward relaying over dissimilar Rician fading."""

__version__ = "0.1.0"

from .capacity import (  # noqa: E402
    AdaptiveScheme,
    CapacityResult,
    capacity_opra,
    capacity_ora,
    capacity_tifr,
    opra_cutoff,
    optimize_tifr_cutoff,
    outage_probability,
)
from .distribution import (  # noqa: E402
    MinSnrDistribution,
    RicianHop,
    SeriesControl,
    min_cdf,
    min_expected_inverse_tail,
    min_pdf,
    single_hop_pdf,
    single_hop_survival,
)
from .montecarlo import SimulationEstimate, estimate_capacity, estimate_min_cdf, sample_hop_snr  # noqa: E402
