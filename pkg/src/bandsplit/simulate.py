"""Slot-by-slot Monte Carlo simulation of the three-queue system.

The per-slot semantics: Bernoulli arrivals enqueue at slot start and may be
served in the same slot (early-arrival convention, minimum delay one slot).
If the primary queue is nonempty the primary transmits on the full band; on a
direct-link outage the packet moves to the relay queue when the secondary
decoded it, else it is retained. If the primary queue is empty the secondary
transmits: under the proposed protocol the heads of both its queues go out
simultaneously on the two sub-bands (assignment redrawn each slot), under PCR
the relay queue gets the full band first and the own queue only when the
relay queue is empty. Channel gains are independent per slot and link, so
every transmission outcome is a Bernoulli draw against a fixed success
probability per (link, band).

Queue-length trajectories are computed by the reflected-random-walk form of
the Lindley recursion, which is exactly equivalent to the slot loop for the
same pre-drawn randomness (tests check this against a naive reference
simulator). Mean delays use the occupancy-sum identity: the summed per-slot
occupancy of a queue over a window equals the summed residence of the packets
served in it, so mean delay = occupancy sum / departures, up to packets
straddling the window boundary. A relayed packet's end-to-end residence is
its primary-queue residence (arrival slot through handoff slot, inclusive)
plus its relay-queue residence (handoff exclusive through delivery slot),
which telescopes to delivery - arrival + 1.

Replications use independent substreams of a counter-based generator keyed by
(seed, replication, stream, protocol); arrival streams are keyed without the
protocol so that protocol comparisons run on common arrivals.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .model import Arrivals, ParameterError, Policy, Protocol, SystemParams, validate
from .outage import LinkBudget, success_prob

# stream ids; arrival streams are shared across protocols
_STREAM_ARRIVALS_P = 0
_STREAM_ARRIVALS_S = 1
_STREAM_BAND = 2
_STREAM_GAIN_P_PD = 3
_STREAM_GAIN_P_S = 4
_STREAM_GAIN_S_SD = 5
_STREAM_GAIN_S_PD = 6

_QUEUES = ("primary", "secondary", "relay")
_LINKS = ("p_pd", "p_s", "s_sd", "s_pd")


@dataclass(frozen=True)
class SimConfig:
    n_slots: int = 1_000_000
    n_replications: int = 10
    seed: int = 42
    warmup_slots: int = 100_000

    def __post_init__(self):
        if self.n_replications < 1:
            raise ParameterError(f"n_replications must be >= 1, got {self.n_replications}")
        if not 0 <= self.warmup_slots < self.n_slots:
            raise ParameterError(
                f"need n_slots > warmup_slots >= 0, got {self.n_slots}, {self.warmup_slots}")


@dataclass(frozen=True)
class SimStats:
    """Aggregated measurements; ci holds 95% half-widths across replications
    keyed by metric name (nan for a single replication)."""

    protocol: Protocol
    n_replications: int
    n_slots: int
    warmup_slots: int
    delivered_primary_rate: float
    delivered_secondary_rate: float
    idle_fraction: float
    relay_inflow_rate: float
    mean_delay_primary_e2e: float
    mean_delay_secondary: float
    mean_queue_len_primary: float
    mean_queue_len_secondary: float
    mean_queue_len_relay: float
    ci: dict = field(default_factory=dict)
    arrivals_primary: int = 0
    arrivals_secondary: int = 0
    delivered_primary: int = 0
    delivered_secondary: int = 0
    final_queue_len: dict = field(default_factory=dict)
    link_attempts: dict = field(default_factory=dict)
    link_successes: dict = field(default_factory=dict)
    growing_queues: tuple = ()


@dataclass(frozen=True)
class ProtocolComparison:
    """Paired comparison on common arrival streams. diff_* are proposed
    minus PCR, with 95% CIs of the paired per-replication differences."""

    proposed: SimStats
    pcr: SimStats
    diff_mean: dict
    diff_ci: dict


_METRICS = (
    "delivered_primary_rate", "delivered_secondary_rate", "idle_fraction",
    "relay_inflow_rate", "mean_delay_primary_e2e", "mean_delay_secondary",
    "mean_queue_len_primary", "mean_queue_len_secondary", "mean_queue_len_relay",
)


@dataclass
class _RepStats:
    metrics: dict
    arrivals_p: int
    arrivals_s: int
    delivered_p: int
    delivered_s: int
    final_len: dict
    link_attempts: dict
    link_successes: dict
    growing: tuple


def _stream(seed: int, rep: int, stream: int, protocol_tag: int = -1) -> np.random.Generator:
    key = (seed, rep, stream) if protocol_tag < 0 else (seed, rep, stream, protocol_tag)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def _reflected(steps: np.ndarray) -> np.ndarray:
    """Queue length after each slot for a +-1/0 step sequence from 0."""
    walk = np.cumsum(steps)
    floor = np.minimum.accumulate(np.minimum(walk, 0))
    return walk - floor


def _shift(after: np.ndarray) -> np.ndarray:
    """Start-of-slot lengths from after-slot lengths."""
    before = np.empty_like(after)
    before[0] = 0
    before[1:] = after[:-1]
    return before


def _success_thresholds(params: SystemParams, policy: Policy):
    """Per-(link, band) success probabilities the per-slot draws compare to."""
    rates = validate(params)
    p = params
    link_p_pd = LinkBudget(p.snr_primary, p.gain_p_pd)
    link_p_s = LinkBudget(p.snr_primary, p.gain_p_s)
    link_s_sd = LinkBudget(p.snr_secondary, p.gain_s_sd)
    link_s_pd = LinkBudget(p.snr_secondary, p.gain_s_pd)
    thr = {
        "p_pd": success_prob(rates.rate_primary, p.bandwidth, link_p_pd),
        "p_s": success_prob(rates.rate_primary, p.bandwidth, link_p_s),
    }
    if policy.protocol is Protocol.PROPOSED:
        d = policy.delta
        thr["own_band1"] = success_prob(rates.rate_secondary, d * p.bandwidth, link_s_sd)
        thr["own_band2"] = success_prob(rates.rate_secondary, (1 - d) * p.bandwidth, link_s_sd)
        thr["rel_band1"] = success_prob(rates.rate_secondary, (1 - d) * p.bandwidth, link_s_pd)
        thr["rel_band2"] = success_prob(rates.rate_secondary, d * p.bandwidth, link_s_pd)
    else:
        thr["own_full"] = success_prob(rates.rate_secondary, p.bandwidth, link_s_sd)
        thr["rel_full"] = success_prob(rates.rate_secondary, p.bandwidth, link_s_pd)
    return thr


def _growing(occ: np.ndarray) -> bool:
    """Occupancy trend heuristic: second half much above first half."""
    half = occ.size // 2
    if half == 0:
        return False
    first = occ[:half].mean()
    second = occ[half:].mean()
    return second - first > max(2.0, 0.25 * first)


def _run_once(params: SystemParams, policy: Policy, arrivals: Arrivals,
              config: SimConfig, rep: int, keep_trace: bool = False):
    """One replication. Returns _RepStats (and trace arrays for tests)."""
    n = config.n_slots
    w = config.warmup_slots
    seed = config.seed
    proto_tag = 0 if policy.protocol is Protocol.PROPOSED else 1
    thr = _success_thresholds(params, policy)

    a_p = _stream(seed, rep, _STREAM_ARRIVALS_P).random(n) < arrivals.lambda_p
    a_s = _stream(seed, rep, _STREAM_ARRIVALS_S).random(n) < arrivals.lambda_s
    succ_pd = _stream(seed, rep, _STREAM_GAIN_P_PD, proto_tag).random(n) < thr["p_pd"]
    succ_ps = _stream(seed, rep, _STREAM_GAIN_P_S, proto_tag).random(n) < thr["p_s"]
    u_ssd = _stream(seed, rep, _STREAM_GAIN_S_SD, proto_tag).random(n)
    u_spd = _stream(seed, rep, _STREAM_GAIN_S_PD, proto_tag).random(n)

    # primary queue
    dep_pot = succ_pd | succ_ps
    n_after = _reflected(a_p.astype(np.int64) - dep_pot)
    n_before = _shift(n_after)
    occ_p = n_before + a_p
    busy = occ_p > 0
    idle = ~busy
    direct = busy & succ_pd
    inflow = busy & ~succ_pd & succ_ps

    # secondary transmission success per slot, by assigned band
    if policy.protocol is Protocol.PROPOSED:
        band = _stream(seed, rep, _STREAM_BAND, proto_tag).random(n) < policy.omega
        own_succ = u_ssd < np.where(band, thr["own_band1"], thr["own_band2"])
        rel_succ = u_spd < np.where(band, thr["rel_band1"], thr["rel_band2"])
    else:
        own_succ = u_ssd < thr["own_full"]
        rel_succ = u_spd < thr["rel_full"]

    # relay queue (service only in idle slots; inflow only in busy slots)
    serve_rel = idle & rel_succ
    m_after = _reflected(inflow.astype(np.int64) - serve_rel)
    m_before = _shift(m_after)
    relay_deliver = serve_rel & (m_before > 0)
    occ_ps = m_before

    # own secondary queue; under PCR it yields to a nonempty relay queue
    if policy.protocol is Protocol.PROPOSED:
        serve_own = idle & own_succ
        own_eligible = idle
    else:
        own_eligible = idle & (m_before == 0)
        serve_own = own_eligible & own_succ
    q_after = _reflected(a_s.astype(np.int64) - serve_own)
    q_before = _shift(q_after)
    occ_s = q_before + a_s
    dep_s = serve_own & (occ_s > 0)

    win = n - w
    deliv_p_win = int(direct[w:].sum()) + int(relay_deliver[w:].sum())
    deliv_s_win = int(dep_s[w:].sum())
    occ_p_sum = int(occ_p[w:].sum())
    occ_ps_sum = int(occ_ps[w:].sum())
    occ_s_sum = int(occ_s[w:].sum())

    metrics = {
        "idle_fraction": idle[w:].mean(),
        "relay_inflow_rate": inflow[w:].mean(),
        "delivered_primary_rate": deliv_p_win / win,
        "delivered_secondary_rate": deliv_s_win / win,
        "mean_delay_primary_e2e":
            (occ_p_sum + occ_ps_sum) / deliv_p_win if deliv_p_win else math.nan,
        "mean_delay_secondary": occ_s_sum / deliv_s_win if deliv_s_win else math.nan,
        "mean_queue_len_primary": occ_p_sum / win,
        "mean_queue_len_secondary": occ_s_sum / win,
        "mean_queue_len_relay": occ_ps_sum / win,
    }
    tx_own = own_eligible & (occ_s > 0)
    tx_rel = idle & (m_before > 0)
    link_attempts = {
        "p_pd": int(busy[w:].sum()),
        "p_s": int(busy[w:].sum()),
        "s_sd": int(tx_own[w:].sum()),
        "s_pd": int(tx_rel[w:].sum()),
    }
    link_successes = {
        "p_pd": int(direct[w:].sum()),
        "p_s": int((busy & succ_ps)[w:].sum()),
        "s_sd": deliv_s_win,
        "s_pd": int(relay_deliver[w:].sum()),
    }
    growing = tuple(name for name, occ in
                    zip(_QUEUES, (occ_p, occ_s, occ_ps)) if _growing(occ[w:]))
    rep_stats = _RepStats(
        metrics=metrics,
        arrivals_p=int(a_p.sum()),
        arrivals_s=int(a_s.sum()),
        delivered_p=int(direct.sum()) + int(relay_deliver.sum()),
        delivered_s=int(dep_s.sum()),
        final_len={"primary": int(n_after[-1]), "secondary": int(q_after[-1]),
                   "relay": int(m_after[-1])},
        link_attempts=link_attempts,
        link_successes=link_successes,
        growing=growing,
    )
    if keep_trace:
        trace = {
            "occ_p": occ_p.astype(np.int64), "occ_s": occ_s.astype(np.int64),
            "occ_ps": occ_ps, "idle": idle, "direct": direct, "inflow": inflow,
            "relay_deliver": relay_deliver, "dep_s": dep_s,
        }
        return rep_stats, trace
    return rep_stats


def _ci_half_width(values: np.ndarray) -> float:
    values = values[~np.isnan(values)]
    r = values.size
    if r < 2:
        return math.nan
    sem = values.std(ddof=1) / math.sqrt(r)
    return float(sps.t.ppf(0.975, r - 1) * sem)


def _aggregate(reps: list, protocol: Protocol, config: SimConfig) -> SimStats:
    means = {}
    ci = {}
    for name in _METRICS:
        vals = np.array([r.metrics[name] for r in reps], dtype=float)
        means[name] = float(np.mean(vals))  # nan if any rep had no departures
        ci[name] = _ci_half_width(vals)
    growing = tuple(sorted({q for r in reps for q in r.growing}))
    return SimStats(
        protocol=protocol,
        n_replications=config.n_replications,
        n_slots=config.n_slots,
        warmup_slots=config.warmup_slots,
        ci=ci,
        arrivals_primary=sum(r.arrivals_p for r in reps),
        arrivals_secondary=sum(r.arrivals_s for r in reps),
        delivered_primary=sum(r.delivered_p for r in reps),
        delivered_secondary=sum(r.delivered_s for r in reps),
        final_queue_len={q: sum(r.final_len[q] for r in reps) for q in _QUEUES},
        link_attempts={l: sum(r.link_attempts[l] for r in reps) for l in _LINKS},
        link_successes={l: sum(r.link_successes[l] for r in reps) for l in _LINKS},
        growing_queues=growing,
        **means,
    )


def simulate(params: SystemParams, policy: Policy, arrivals: Arrivals,
             config: SimConfig) -> SimStats:
    """Run all replications and aggregate with across-replication CIs."""
    reps = [_run_once(params, policy, arrivals, config, rep)
            for rep in range(config.n_replications)]
    return _aggregate(reps, policy.protocol, config)


def compare_protocols(params: SystemParams, arrivals: Arrivals, config: SimConfig,
                      policy: Policy) -> ProtocolComparison:
    """Proposed (at the given policy) vs PCR on common arrival streams.

    Channel and band streams are keyed per protocol, arrival streams are
    shared, so differences are paired by replication.
    """
    if policy.protocol is not Protocol.PROPOSED:
        raise ParameterError("policy for the proposed arm must have protocol PROPOSED")
    reps_prop = [_run_once(params, policy, arrivals, config, rep)
                 for rep in range(config.n_replications)]
    pcr_policy = Policy(protocol=Protocol.PCR)
    reps_pcr = [_run_once(params, pcr_policy, arrivals, config, rep)
                for rep in range(config.n_replications)]
    diff_mean = {}
    diff_ci = {}
    for name in _METRICS:
        d = np.array([a.metrics[name] - b.metrics[name]
                      for a, b in zip(reps_prop, reps_pcr)], dtype=float)
        diff_mean[name] = float(np.mean(d))
        diff_ci[name] = _ci_half_width(d)
    return ProtocolComparison(
        proposed=_aggregate(reps_prop, Protocol.PROPOSED, config),
        pcr=_aggregate(reps_pcr, Protocol.PCR, config),
        diff_mean=diff_mean,
        diff_ci=diff_ci,
    )
