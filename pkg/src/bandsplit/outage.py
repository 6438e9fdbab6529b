"""Rayleigh-fading outage and success probabilities for a single link.

A transmission at ``rate`` bits/s over ``band`` Hz succeeds when the rate does
not exceed the instantaneous channel capacity; with an exponentially
distributed power gain this gives the closed form

    P_success = exp(-(2**(rate/band) - 1) / (snr * mean_gain))
"""

import math
from dataclasses import dataclass

from .model import ParameterError

# Beyond this rate/band ratio the exponent underflows to exactly 0.0 in double
# precision for any realistic SNR, so skip the power evaluation entirely.
_RATIO_CUTOFF = 700.0 * math.log(2.0)


@dataclass(frozen=True)
class LinkBudget:
    """SNR and mean channel gain of one transmitter->receiver link."""

    snr: float
    mean_gain: float

    def __post_init__(self):
        if self.snr <= 0:
            raise ParameterError(f"snr must be > 0, got {self.snr}")
        if self.mean_gain <= 0:
            raise ParameterError(f"mean_gain must be > 0, got {self.mean_gain}")


def success_prob(rate: float, band: float, link: LinkBudget) -> float:
    """Probability the link is not in outage at the given rate and band.

    Conventions: rate 0 always succeeds; a zero-width band always fails for a
    positive rate (the continuous limit, needed when the optimizer's grid
    touches delta = 0 or 1).
    """
    if rate < 0:
        raise ParameterError(f"rate must be >= 0, got {rate}")
    if band < 0:
        raise ParameterError(f"band must be >= 0, got {band}")
    if rate == 0.0:
        return 1.0
    if band == 0.0:
        return 0.0
    ratio = rate / band
    if ratio > _RATIO_CUTOFF:
        return 0.0
    return math.exp(-(2.0 ** ratio - 1.0) / (link.snr * link.mean_gain))


def outage_prob(rate: float, band: float, link: LinkBudget) -> float:
    """Complement of success_prob; same domain and conventions."""
    return 1.0 - success_prob(rate, band, link)
