"""Shared parameter and policy types plus physical-consistency validation.

All analysis modules consume the types defined here. Probabilities and rates
are per-slot; physical quantities carry SI-ish units (seconds, Hz, bits,
Watts/Hz). The dimensionless spectral load ``b / (T * W)`` is what parameter
sweeps are run over: rescaling units so that it is preserved leaves every
downstream probability unchanged.
"""

from dataclasses import dataclass
from enum import Enum


class ParameterError(ValueError):
    """A supplied parameter violates its physical or range constraints."""


class UnstableError(RuntimeError):
    """A queue's arrival rate exceeds its service rate (or a delay cap is
    below the irreducible queueing delay), so the requested quantity does
    not exist."""


class InfeasibleError(RuntimeError):
    """No control setting satisfies the stability/delay constraints."""


class Protocol(Enum):
    PROPOSED = "proposed"
    PCR = "pcr"


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants of one primary/secondary link pair.

    Mean channel gains are the means of the exponentially distributed power
    gains of the four links: primary->primary destination, primary->secondary
    transmitter, secondary->secondary destination, secondary->primary
    destination.
    """

    slot_duration: float        # T, seconds
    sensing_duration: float     # tau, seconds (spent sensing, not transmitting)
    bandwidth: float            # W, Hz
    packet_bits: float          # b, bits per packet
    power_primary: float        # Watts/Hz
    power_secondary: float      # Watts/Hz
    noise: float                # Watts/Hz
    gain_p_pd: float = 1.0
    gain_p_s: float = 1.0
    gain_s_sd: float = 1.0
    gain_s_pd: float = 1.0

    @property
    def snr_primary(self) -> float:
        return self.power_primary / self.noise

    @property
    def snr_secondary(self) -> float:
        return self.power_secondary / self.noise


@dataclass(frozen=True)
class Rates:
    """Transmission rates implied by the slot structure."""

    rate_primary: float    # bits/s, full slot available
    rate_secondary: float  # bits/s, slot minus sensing time
    spectral_rate: float   # bits/s/Hz, packet load per unit time-bandwidth


@dataclass(frozen=True)
class Policy:
    """Secondary-user control pair: band split and assignment probability.

    ``delta`` is the fraction of the bandwidth in the first sub-band;
    ``omega`` the probability that the secondary's own queue gets it (the
    relay queue gets the complement). Both are ignored when ``protocol`` is
    PCR, where the relay queue is always served first on the full band.
    """

    delta: float = 0.5
    omega: float = 0.5
    protocol: Protocol = Protocol.PROPOSED

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"delta must be in [0,1], got {self.delta}")
        if not 0.0 <= self.omega <= 1.0:
            raise ParameterError(f"omega must be in [0,1], got {self.omega}")


@dataclass(frozen=True)
class Arrivals:
    """Bernoulli mean arrival rates, packets per slot."""

    lambda_p: float
    lambda_s: float

    def __post_init__(self):
        for name, value in (("lambda_p", self.lambda_p), ("lambda_s", self.lambda_s)):
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must be in [0,1], got {value}")


def validate(params: SystemParams) -> Rates:
    """Check parameter invariants and derive the transmission rates.

    Raises ParameterError on non-positive durations/bandwidth/powers, on a
    sensing time that consumes the whole slot, or on non-finite SNRs.
    """
    p = params
    if p.slot_duration <= 0:
        raise ParameterError(f"slot_duration must be > 0, got {p.slot_duration}")
    if p.bandwidth <= 0:
        raise ParameterError(f"bandwidth must be > 0, got {p.bandwidth}")
    if p.packet_bits <= 0:
        raise ParameterError(f"packet_bits must be > 0, got {p.packet_bits}")
    if not 0.0 <= p.sensing_duration < p.slot_duration:
        raise ParameterError(
            f"sensing_duration must satisfy 0 <= tau < T, got tau={p.sensing_duration}, T={p.slot_duration}")
    for name in ("power_primary", "power_secondary", "noise"):
        if getattr(p, name) <= 0:
            raise ParameterError(f"{name} must be > 0, got {getattr(p, name)}")
    for name in ("gain_p_pd", "gain_p_s", "gain_s_sd", "gain_s_pd"):
        if getattr(p, name) <= 0:
            raise ParameterError(f"{name} must be > 0, got {getattr(p, name)}")
    for name, snr in (("primary", p.snr_primary), ("secondary", p.snr_secondary)):
        if not (0.0 < snr < float("inf")):
            raise ParameterError(f"{name} SNR must be finite and positive, got {snr}")
    return Rates(
        rate_primary=p.packet_bits / p.slot_duration,
        rate_secondary=p.packet_bits / (p.slot_duration - p.sensing_duration),
        spectral_rate=p.packet_bits / (p.slot_duration * p.bandwidth),
    )


def normalized_params(spectral_rate: float,
                      tau_frac: float = 0.1,
                      snr_primary: float = 10.0,
                      snr_secondary: float = 100.0,
                      noise: float = 1e-11,
                      gain_p_pd: float = 1.0,
                      gain_p_s: float = 1.0,
                      gain_s_sd: float = 1.0,
                      gain_s_pd: float = 1.0) -> SystemParams:
    """Unit-slot, unit-bandwidth parameter set at a given spectral load.

    Convenience constructor for sweeps: T = W = 1, packet size set so that
    b/(T*W) equals ``spectral_rate``, powers derived from the requested SNRs.
    """
    if spectral_rate <= 0:
        raise ParameterError(f"spectral_rate must be > 0, got {spectral_rate}")
    if not 0.0 <= tau_frac < 1.0:
        raise ParameterError(f"tau_frac must be in [0,1), got {tau_frac}")
    return SystemParams(
        slot_duration=1.0,
        sensing_duration=tau_frac,
        bandwidth=1.0,
        packet_bits=spectral_rate,
        power_primary=snr_primary * noise,
        power_secondary=snr_secondary * noise,
        noise=noise,
        gain_p_pd=gain_p_pd,
        gain_p_s=gain_p_s,
        gain_s_sd=gain_s_sd,
        gain_s_pd=gain_s_pd,
    )
