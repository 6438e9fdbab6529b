"""Closed-form queue rates, stationary probabilities, stability and delays.

The system has three discrete-time queues: the primary's own queue, the
secondary's own queue, and the relay queue holding primary packets that the
primary destination missed but the secondary decoded. Service of both
secondary queues happens only in slots where the primary queue is empty.

Delay expressions are evaluated exactly as printed in their source (a moment
generating function analysis of the interacting queues); their validation is
delegated to the Monte Carlo simulator.
"""

from dataclasses import dataclass

from .model import ParameterError, Policy, Protocol, SystemParams, UnstableError, InfeasibleError, validate
from .outage import LinkBudget, outage_prob, success_prob


@dataclass(frozen=True)
class QueueMetrics:
    """Per-slot rates and probabilities of the three-queue system.

    mu_s = p_idle * phi_sd and mu_ps = p_idle * phi_pd hold exactly; the phi's
    are the conditional success mixtures of the two secondary transmissions
    given an idle primary.
    """

    mu_p: float        # primary service rate
    p_idle: float      # stationary probability the primary queue is empty
    lambda_ps: float   # relay queue arrival rate
    mu_s: float        # secondary own-queue service rate
    mu_ps: float       # relay queue service rate
    phi_sd: float      # success mixture toward the secondary destination
    phi_pd: float      # success mixture toward the primary destination


@dataclass(frozen=True)
class StabilityVerdict:
    primary: bool
    secondary: bool
    relay: bool

    @property
    def all_stable(self) -> bool:
        return self.primary and self.secondary and self.relay


@dataclass(frozen=True)
class DelayCoeffs:
    """Coefficients of the primary end-to-end delay and its cap constraint.

    The relay contribution to the primary delay is the ratio
    (num_lin*lp + num_const) / (den_quad*lp^2 + den_lin*lp + den_const); the
    cap D_p <= cap linearizes to phi_pd * phi_coef <= phi_bound.
    """

    handoff: float     # probability a served primary packet moves to the relay
    num_lin: float
    num_const: float
    den_quad: float
    den_lin: float
    den_const: float
    cap_slack: float   # cap minus the irreducible primary-queue delay term
    phi_coef: float
    phi_bound: float


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must be in [0,1], got {value}")


def primary_service_rate(out_p_pd: float, out_p_s: float) -> float:
    """Head-of-line primary packet departs unless both links are in outage."""
    _check_prob("out_p_pd", out_p_pd)
    _check_prob("out_p_s", out_p_s)
    return 1.0 - out_p_pd * out_p_s


def primary_idle_prob(lambda_p: float, mu_p: float) -> float:
    """Stationary probability that the primary queue is empty, 1 - lp/mu."""
    _check_prob("lambda_p", lambda_p)
    _check_prob("mu_p", mu_p)
    if lambda_p == 0.0:
        return 1.0
    if lambda_p > mu_p:
        raise UnstableError(f"primary queue unstable: lambda_p={lambda_p} > mu_p={mu_p}")
    return 1.0 - lambda_p / mu_p


def relay_arrival_rate(out_p_pd: float, out_p_s: float, p_idle: float) -> float:
    """Rate of primary packets handed off to the relay queue."""
    _check_prob("out_p_pd", out_p_pd)
    _check_prob("out_p_s", out_p_s)
    _check_prob("p_idle", p_idle)
    return out_p_pd * (1.0 - out_p_s) * (1.0 - p_idle)


def success_mixture(omega: float, delta: float, rate: float, band: float,
                    link: LinkBudget, dest: str) -> float:
    """Success probability of a secondary transmission under the random split.

    For dest="sd" (own data) omega weights the delta-band; for dest="pd"
    (relay data) omega weights the complementary band, mirroring which queue
    gets which sub-band.
    """
    _check_prob("omega", omega)
    _check_prob("delta", delta)
    s1 = success_prob(rate, delta * band, link)
    s2 = success_prob(rate, (1.0 - delta) * band, link)
    if dest == "sd":
        return omega * s1 + (1.0 - omega) * s2
    if dest == "pd":
        return omega * s2 + (1.0 - omega) * s1
    raise ParameterError(f"dest must be 'sd' or 'pd', got {dest!r}")


def primary_outages(params: SystemParams) -> tuple[float, float]:
    """Outage probabilities of the two primary links (to pd, to s)."""
    rates = validate(params)
    p = params
    out_pd = outage_prob(rates.rate_primary, p.bandwidth, LinkBudget(p.snr_primary, p.gain_p_pd))
    out_s = outage_prob(rates.rate_primary, p.bandwidth, LinkBudget(p.snr_primary, p.gain_p_s))
    return out_pd, out_s


def metrics(params: SystemParams, policy: Policy, lambda_p: float) -> QueueMetrics:
    """Assemble all closed-form queue metrics at a policy and primary load.

    Under PCR the relay queue has strict priority on the full band; its
    service rate must cover lambda_ps or UnstableError is raised. The own
    queue's mixture then carries the relay-empty probability.
    """
    rates = validate(params)
    p = params
    out_pd, out_s = primary_outages(params)
    mu_p = primary_service_rate(out_pd, out_s)
    p_idle = primary_idle_prob(lambda_p, mu_p)
    lam_ps = relay_arrival_rate(out_pd, out_s, p_idle)
    link_sd = LinkBudget(p.snr_secondary, p.gain_s_sd)
    link_pd = LinkBudget(p.snr_secondary, p.gain_s_pd)
    if policy.protocol is Protocol.PROPOSED:
        phi_sd = success_mixture(policy.omega, policy.delta, rates.rate_secondary,
                                 p.bandwidth, link_sd, "sd")
        phi_pd = success_mixture(policy.omega, policy.delta, rates.rate_secondary,
                                 p.bandwidth, link_pd, "pd")
    else:
        succ_full_sd = success_prob(rates.rate_secondary, p.bandwidth, link_sd)
        succ_full_pd = success_prob(rates.rate_secondary, p.bandwidth, link_pd)
        mu_ps_full = p_idle * succ_full_pd
        if lam_ps > mu_ps_full:
            raise UnstableError(
                f"relay queue unstable under PCR: lambda_ps={lam_ps} > mu_ps={mu_ps_full}")
        relay_empty = 1.0 - lam_ps / mu_ps_full if lam_ps > 0 else 1.0
        phi_sd = relay_empty * succ_full_sd
        phi_pd = succ_full_pd
    return QueueMetrics(
        mu_p=mu_p,
        p_idle=p_idle,
        lambda_ps=lam_ps,
        mu_s=p_idle * phi_sd,
        mu_ps=p_idle * phi_pd,
        phi_sd=phi_sd,
        phi_pd=phi_pd,
    )


def is_stable(m: QueueMetrics, lambda_p: float, lambda_s: float) -> StabilityVerdict:
    """Non-strict stability check of all three queues."""
    _check_prob("lambda_p", lambda_p)
    _check_prob("lambda_s", lambda_s)
    return StabilityVerdict(
        primary=lambda_p <= m.mu_p,
        secondary=lambda_s <= m.mu_s,
        relay=m.lambda_ps <= m.mu_ps,
    )


def secondary_delay(lambda_p: float, lambda_s: float, mu_p: float, phi_sd: float) -> float:
    """Mean secondary queueing delay in slots, from the closed form.

    Requires strict stability; saturation (denominator <= 0) raises
    UnstableError. At lambda_p = 0 this reduces to the plain Geo/Geo/1 delay
    (1 - lambda_s) / (phi_sd - lambda_s).
    """
    _check_prob("lambda_p", lambda_p)
    _check_prob("lambda_s", lambda_s)
    _check_prob("mu_p", mu_p)
    _check_prob("phi_sd", phi_sd)
    num = ((-mu_p + phi_sd - mu_p * phi_sd) * lambda_p
           - mu_p ** 2 * lambda_s + mu_p * lambda_p * lambda_s + mu_p ** 2)
    den = (phi_sd * lambda_p + mu_p * lambda_s - mu_p * phi_sd) * (lambda_p - mu_p)
    if den <= 0.0:
        raise UnstableError(
            f"secondary delay undefined: saturated or unstable "
            f"(lambda_p={lambda_p}, lambda_s={lambda_s}, mu_p={mu_p}, phi_sd={phi_sd})")
    return num / den


def _relay_term_coeffs(mu_p: float, out_p_pd: float, phi_pd: float):
    """Coefficients (handoff, f, g, a, B, c) of the relay delay ratio."""
    handoff = mu_p - (1.0 - out_p_pd)
    den_quad = handoff + phi_pd
    num_lin = handoff * ((phi_pd - (1.0 - out_p_pd)) / mu_p - den_quad)
    num_const = handoff * mu_p
    den_lin = mu_p * (-den_quad - phi_pd)
    den_const = phi_pd * mu_p ** 2
    return handoff, num_lin, num_const, den_quad, den_lin, den_const


def primary_delay(lambda_p: float, mu_p: float, out_p_pd: float, phi_pd: float) -> float:
    """Mean primary end-to-end delay in slots (own queue plus relay residence).

    First term is the primary-queue delay; the second is the mean relay queue
    length normalized by lambda_p. Requires both the primary and relay queues
    strictly stable.
    """
    _check_prob("lambda_p", lambda_p)
    _check_prob("mu_p", mu_p)
    _check_prob("out_p_pd", out_p_pd)
    _check_prob("phi_pd", phi_pd)
    if mu_p <= lambda_p:
        raise UnstableError(f"primary queue saturated: lambda_p={lambda_p}, mu_p={mu_p}")
    _, num_lin, num_const, den_quad, den_lin, den_const = _relay_term_coeffs(mu_p, out_p_pd, phi_pd)
    den = den_quad * lambda_p ** 2 + den_lin * lambda_p + den_const
    num = num_lin * lambda_p + num_const
    if den <= 0.0:
        raise UnstableError(
            f"relay queue saturated (lambda_p={lambda_p}, mu_p={mu_p}, phi_pd={phi_pd})")
    return (1.0 - lambda_p) / (mu_p - lambda_p) + num / den


def delay_coeffs(lambda_p: float, mu_p: float, out_p_pd: float, phi_pd: float,
                 cap: float) -> DelayCoeffs:
    """All delay coefficients plus the linearized cap constraint pieces.

    Raises InfeasibleError when the cap is below the irreducible first delay
    term (cap_slack < 0), UnstableError when the primary queue is saturated.
    """
    _check_prob("lambda_p", lambda_p)
    _check_prob("mu_p", mu_p)
    _check_prob("out_p_pd", out_p_pd)
    _check_prob("phi_pd", phi_pd)
    if mu_p <= lambda_p:
        raise UnstableError(f"primary queue saturated: lambda_p={lambda_p}, mu_p={mu_p}")
    handoff, num_lin, num_const, den_quad, den_lin, den_const = \
        _relay_term_coeffs(mu_p, out_p_pd, phi_pd)
    gap = mu_p - lambda_p
    cap_slack = cap - (1.0 - lambda_p) / gap
    if cap_slack < 0.0:
        raise InfeasibleError(
            f"delay cap {cap} is below the irreducible primary-queue delay "
            f"{(1.0 - lambda_p) / gap}")
    phi_coef = handoff * lambda_p * (1.0 / mu_p - 1.0) - cap_slack * gap ** 2
    phi_bound = (-handoff * cap_slack * lambda_p * gap
                 + handoff * lambda_p * ((1.0 - out_p_pd) / mu_p + handoff)
                 - num_const)
    return DelayCoeffs(
        handoff=handoff,
        num_lin=num_lin,
        num_const=num_const,
        den_quad=den_quad,
        den_lin=den_lin,
        den_const=den_const,
        cap_slack=cap_slack,
        phi_coef=phi_coef,
        phi_bound=phi_bound,
    )
