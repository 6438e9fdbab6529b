"""Control optimization: throughput maximization and delay minimization.

For a fixed band split the throughput problem is a one-variable linear
program in the assignment probability and is solved by its printed case
analysis; the delay problem is linear-fractional, solved exactly by
evaluating the (monotone) objective at the endpoints of the feasible
interval. The split itself is found by grid search over [1/2, 1] (the
(omega, delta) -> (1-omega, 1-delta) symmetry covers the other half) with one
local refinement pass around the incumbent.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import queueing
from .model import (InfeasibleError, ParameterError, Policy, Protocol,
                    SystemParams, UnstableError, validate)
from .outage import LinkBudget, success_prob


class OptStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class OptResult:
    delta_star: float
    omega_star: float
    objective: float
    status: OptStatus
    metrics_at_opt: queueing.QueueMetrics | None


@dataclass(frozen=True)
class ReducedLP:
    """Data of the one-variable throughput LP at a fixed band split.

    zeta1/zeta2 are the relay-stability gaps when the relay queue is on the
    delta / (1-delta) band; beta = zeta1 - zeta2 multiplies omega in the relay
    constraint and eta is the objective slope. omega_lo/omega_hi give the
    feasible interval intersected with [0,1], None when empty.
    """

    zeta1: float
    zeta2: float
    beta: float
    eta: float
    omega_lo: float | None
    omega_hi: float | None


@dataclass(frozen=True)
class _Setting:
    """Quantities of one (params, lambda_p) operating point that do not
    depend on the control pair."""

    rate_secondary: float
    bandwidth: float
    out_pd: float
    out_s: float
    mu_p: float
    p_idle: float
    lam_ps: float
    relay_load: float     # lambda_ps / p_idle
    link_sd: LinkBudget
    link_pd: LinkBudget


def _setting(params: SystemParams, lambda_p: float) -> _Setting:
    rates = validate(params)
    out_pd, out_s = queueing.primary_outages(params)
    mu_p = queueing.primary_service_rate(out_pd, out_s)
    p_idle = queueing.primary_idle_prob(lambda_p, mu_p)
    lam_ps = queueing.relay_arrival_rate(out_pd, out_s, p_idle)
    if lam_ps == 0.0:
        relay_load = 0.0
    elif p_idle == 0.0:
        relay_load = math.inf  # saturated primary leaves no service slots
    else:
        relay_load = lam_ps / p_idle
    return _Setting(
        rate_secondary=rates.rate_secondary,
        bandwidth=params.bandwidth,
        out_pd=out_pd,
        out_s=out_s,
        mu_p=mu_p,
        p_idle=p_idle,
        lam_ps=lam_ps,
        relay_load=relay_load,
        link_sd=LinkBudget(params.snr_secondary, params.gain_s_sd),
        link_pd=LinkBudget(params.snr_secondary, params.gain_s_pd),
    )


def _band_succ(s: _Setting, frac: float, link: LinkBudget) -> float:
    return success_prob(s.rate_secondary, frac * s.bandwidth, link)


def reduced_lp(params: SystemParams, lambda_p: float, delta: float) -> ReducedLP:
    """Build the reduced throughput LP for one band split."""
    if not 0.0 <= delta <= 1.0:
        raise ParameterError(f"delta must be in [0,1], got {delta}")
    s = _setting(params, lambda_p)
    return _reduced_lp_at(s, delta)


def _reduced_lp_at(s: _Setting, delta: float) -> ReducedLP:
    e_pd1 = _band_succ(s, delta, s.link_pd)
    e_pd2 = _band_succ(s, 1.0 - delta, s.link_pd)
    e_sd1 = _band_succ(s, delta, s.link_sd)
    e_sd2 = _band_succ(s, 1.0 - delta, s.link_sd)
    zeta1 = s.relay_load - e_pd1
    zeta2 = s.relay_load - e_pd2
    beta = zeta1 - zeta2
    eta = e_sd1 - e_sd2
    lo, hi = _relay_interval(delta, zeta1, zeta2, beta)
    return ReducedLP(zeta1=zeta1, zeta2=zeta2, beta=beta, eta=eta,
                     omega_lo=lo, omega_hi=hi)


def _relay_interval(delta, zeta1, zeta2, beta):
    """Feasible omega interval of the relay-stability constraint, in [0,1]."""
    if beta == 0.0:
        # equal success on both bands (delta = 1/2 or both underflow)
        return (0.0, 1.0) if zeta1 <= 0.0 else (None, None)
    if beta < 0.0:
        hi = zeta1 / beta
        return (0.0, min(hi, 1.0)) if hi >= 0.0 else (None, None)
    lo = zeta1 / beta
    return (max(lo, 0.0), 1.0) if lo <= 1.0 else (None, None)


def omega_star_throughput(delta: float, reduced: ReducedLP) -> float | None:
    """Optimal assignment probability for a fixed split, or None if infeasible.

    Case analysis of max eta*omega s.t. zeta1 <= beta*omega, omega in [0,1]:
    for delta > 1/2 (beta < 0, eta > 0) feasibility needs zeta1 <= 0 and the
    best omega is min(zeta1/beta, 1); for delta < 1/2 it mirrors; at
    delta = 1/2 the objective is flat and 0.5 is returned by convention.
    """
    if delta == 0.5:
        return 0.5 if reduced.zeta1 <= 0.0 else None
    if delta > 0.5:
        if reduced.zeta1 > 0.0:
            return None
        if reduced.beta == 0.0:
            return 1.0  # relay constraint vacuous, objective increasing
        return min(reduced.zeta1 / reduced.beta, 1.0)
    if reduced.zeta2 > 0.0:
        return None
    if reduced.beta == 0.0:
        return 0.0
    return max(reduced.zeta1 / reduced.beta, 0.0)


def _delta_grid(step: float) -> np.ndarray:
    n = max(2, round(0.5 / step) + 1)
    return np.linspace(0.5, 1.0, n)


def _refine_grid(center: float, step: float) -> np.ndarray:
    lo = max(0.5, center - step)
    hi = min(1.0, center + step)
    fine = step * 1e-2
    n = max(2, round((hi - lo) / fine) + 1)
    return np.linspace(lo, hi, n)


def _grid_search(solve_at, grid_step: float, minimize: bool):
    """Coarse sweep over [1/2, 1] plus one refinement pass around the winner.

    solve_at(delta) returns (objective, omega) or None when infeasible.
    Ties break toward the larger split (non-strict replacement while sweeping
    ascending). Returns (objective, delta, omega) or None.
    """
    def sweep(grid, best):
        for delta in grid:
            res = solve_at(float(delta))
            if res is None:
                continue
            obj, omega = res
            if best is None or (obj <= best[0] if minimize else obj >= best[0]):
                best = (obj, float(delta), omega)
        return best

    best = sweep(_delta_grid(grid_step), None)
    if best is not None:
        best = sweep(_refine_grid(best[1], grid_step), best)
    return best


def max_secondary_throughput(params: SystemParams, lambda_p: float,
                             grid_step: float = 1e-3) -> OptResult:
    """Maximize the secondary service rate over (delta, omega).

    Sweeps delta over [1/2, 1], solves the reduced LP per point, refines once
    around the incumbent. Ties break toward the larger split.
    """
    s = _setting(params, lambda_p)

    def solve_at(delta: float):
        lp = _reduced_lp_at(s, delta)
        omega = omega_star_throughput(delta, lp)
        if omega is None:
            return None
        phi_sd = (omega * _band_succ(s, delta, s.link_sd)
                  + (1.0 - omega) * _band_succ(s, 1.0 - delta, s.link_sd))
        return s.p_idle * phi_sd, omega

    best = _grid_search(solve_at, grid_step, minimize=False)
    if best is None:
        return OptResult(math.nan, math.nan, math.nan, OptStatus.INFEASIBLE, None)
    obj, delta, omega = best
    pol = Policy(delta=delta, omega=min(max(omega, 0.0), 1.0))
    return OptResult(pol.delta, pol.omega, obj, OptStatus.OPTIMAL,
                     queueing.metrics(params, pol, lambda_p))


def kappa(params: SystemParams, lambda_p: float) -> float:
    """Minimum bandwidth fraction the relay queue needs when omega = 1.

    Returns 0 in the no-relaying limits (lambda_p = 0 or a never-failing
    direct link) and +inf when no fraction can stabilize the relay queue.
    """
    s = _setting(params, lambda_p)
    if lambda_p == 0.0:
        return 0.0
    rates = validate(params)
    handoff = s.out_pd * (1.0 - s.out_s)
    if handoff == 0.0:
        return 0.0
    if s.mu_p <= lambda_p:
        return math.inf
    arg = (s.mu_p - lambda_p) / (handoff * lambda_p)
    if arg <= 1.0:
        return math.inf
    gs = params.snr_secondary * params.gain_s_pd
    denom = ((1.0 - params.sensing_duration / params.slot_duration)
             * math.log2(1.0 + gs * math.log(arg)))
    return rates.spectral_rate / denom


def deterministic_delta_star(params: SystemParams, lambda_p: float) -> float:
    """Throughput-optimal split with the assignment fixed to the own queue."""
    k = kappa(params, lambda_p)
    if k > 1.0:
        raise InfeasibleError(
            f"relay queue cannot be stabilized with omega=1: kappa={k}")
    return 1.0 - k


def lambda_p_max(params: SystemParams) -> float:
    """Largest primary arrival rate the relay queue can absorb (full band)."""
    s = _setting(params, 0.0)
    handoff = s.out_pd * (1.0 - s.out_s)
    if handoff == 0.0:
        return s.mu_p
    e_full = _band_succ(s, 1.0, s.link_pd)
    return s.mu_p * e_full / (e_full + handoff)


def r_max(params: SystemParams, lambda_p: float,
          r_upper: float = 64.0, scan_points: int = 1024) -> float:
    """Largest spectral load the primary can sustain with full-band relaying.

    Solves the fixed point R = (1 - tau/T) * log2(1 + g*ln(arg(R))) by scan
    plus bisection; both sides depend on R through the primary outages.
    packet_bits of ``params`` is ignored (it is the unknown). Raises
    InfeasibleError when no feasible rate exists, or when the residual is
    still negative at r_upper (unbounded; happens as lambda_p -> 0).
    """
    if not 0.0 < lambda_p <= 1.0:
        raise InfeasibleError(
            f"spectral rate unbounded or undefined at lambda_p={lambda_p}")
    gs = params.snr_secondary * params.gain_s_pd
    tau_frac = params.sensing_duration / params.slot_duration

    def residual(r: float) -> float | None:
        """R - RHS(R); None when RHS leaves its domain (treated as +inf)."""
        p = replace(params, packet_bits=r * params.slot_duration * params.bandwidth)
        out_pd, out_s = queueing.primary_outages(p)
        mu_p = 1.0 - out_pd * out_s
        handoff = out_pd * (1.0 - out_s)
        if mu_p <= lambda_p or handoff == 0.0:
            return None
        arg = (mu_p - lambda_p) / (handoff * lambda_p)
        inner = 1.0 + gs * math.log(arg)
        if inner <= 0.0:
            return None
        return r - (1.0 - tau_frac) * math.log2(inner)

    grid = np.linspace(r_upper / scan_points, r_upper, scan_points)
    lo = None
    hi = None
    for r in grid:
        g = residual(float(r))
        if g is None or g > 0.0:
            hi = float(r)
            break
        lo = float(r)
    if lo is None:
        raise InfeasibleError(f"no feasible spectral rate at lambda_p={lambda_p}")
    if hi is None:
        raise InfeasibleError(
            f"bisection bracket exhausted at r_upper={r_upper}: spectral rate "
            f"exceeds the search bound (lambda_p={lambda_p})")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        g = residual(mid)
        if g is None or g > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def pcr_throughput(params: SystemParams, lambda_p: float) -> float:
    """Maximum stable secondary throughput of the priority-relaying baseline."""
    s = _setting(params, lambda_p)
    e_pd = _band_succ(s, 1.0, s.link_pd)
    e_sd = _band_succ(s, 1.0, s.link_sd)
    mu_ps_full = s.p_idle * e_pd
    if s.lam_ps > mu_ps_full:
        raise InfeasibleError(
            f"relay queue unstable under PCR: lambda_ps={s.lam_ps} > {mu_ps_full}")
    relay_empty = 1.0 - s.lam_ps / mu_ps_full if s.lam_ps > 0.0 else 1.0
    return relay_empty * s.p_idle * e_sd


def pcr_equivalent_policy(params: SystemParams, lambda_p: float) -> Policy:
    """Band-splitting policy whose service rates match the PCR baseline."""
    s = _setting(params, lambda_p)
    e_pd = _band_succ(s, 1.0, s.link_pd)
    mu_ps_full = s.p_idle * e_pd
    if s.lam_ps > mu_ps_full:
        raise InfeasibleError(
            f"relay queue unstable under PCR: lambda_ps={s.lam_ps} > {mu_ps_full}")
    omega = 1.0 - s.lam_ps / mu_ps_full if s.lam_ps > 0.0 else 1.0
    return Policy(delta=1.0, omega=omega, protocol=Protocol.PROPOSED)


def _delay_interval(s: _Setting, coeffs, sec_load: float, delta: float):
    """Feasible omega interval of the delay problem at one split, or None.

    Intersects [0,1] with the three linear-in-omega constraints: secondary
    stability, relay stability, and the linearized primary delay cap.
    """
    e_sd1 = _band_succ(s, delta, s.link_sd)
    e_sd2 = _band_succ(s, 1.0 - delta, s.link_sd)
    e_pd1 = _band_succ(s, delta, s.link_pd)
    e_pd2 = _band_succ(s, 1.0 - delta, s.link_pd)
    eta = e_sd1 - e_sd2
    beta = e_pd2 - e_pd1
    zeta1 = s.relay_load - e_pd1
    lo, hi = 0.0, 1.0
    # secondary stability: eta*omega >= lambda_s/p_idle - e_sd2
    t = sec_load - e_sd2
    if eta > 0.0:
        lo = max(lo, t / eta)
    elif eta < 0.0:
        hi = min(hi, t / eta)
    elif t > 0.0:
        return None
    # relay stability: beta*omega >= zeta1
    if beta > 0.0:
        lo = max(lo, zeta1 / beta)
    elif beta < 0.0:
        hi = min(hi, zeta1 / beta)
    elif zeta1 > 0.0:
        return None
    # delay cap: (beta*phi_coef)*omega <= phi_bound - phi_coef*e_pd1
    coef = beta * coeffs.phi_coef
    t = coeffs.phi_bound - coeffs.phi_coef * e_pd1
    if coef > 0.0:
        hi = min(hi, t / coef)
    elif coef < 0.0:
        lo = max(lo, t / coef)
    elif t < 0.0:
        return None
    if lo > hi:
        return None
    return lo, hi, e_sd1, e_sd2


def delay_feasible_interval(params: SystemParams, lambda_p: float, lambda_s: float,
                            cap: float, delta: float):
    """(omega_lo, omega_hi) satisfying all delay-problem constraints at one
    split, or None when empty. Raises InfeasibleError when the cap is below
    the irreducible primary-queue delay."""
    s = _setting(params, lambda_p)
    coeffs = queueing.delay_coeffs(lambda_p, s.mu_p, s.out_pd, 1.0, cap)
    res = _delay_interval(s, coeffs, lambda_s / s.p_idle if s.p_idle else math.inf, delta)
    return None if res is None else (res[0], res[1])


def min_secondary_delay(params: SystemParams, lambda_p: float, lambda_s: float,
                        cap: float, grid_step: float = 1e-3) -> OptResult:
    """Minimize the secondary delay subject to stability and a primary cap.

    Per split the three constraints (secondary stability, relay stability,
    linearized delay cap) are linear in omega; the delay objective is a ratio
    of affine functions, hence monotone on the feasible interval, so only the
    endpoints are evaluated.
    """
    s = _setting(params, lambda_p)
    if s.mu_p <= lambda_p:
        return OptResult(math.nan, math.nan, math.nan, OptStatus.INFEASIBLE, None)
    try:
        # cap pieces do not depend on phi_pd, so any placeholder works
        coeffs = queueing.delay_coeffs(lambda_p, s.mu_p, s.out_pd, 1.0, cap)
    except InfeasibleError:
        return OptResult(math.nan, math.nan, math.nan, OptStatus.INFEASIBLE, None)
    sec_load = lambda_s / s.p_idle

    def solve_at(delta: float):
        res = _delay_interval(s, coeffs, sec_load, delta)
        if res is None:
            return None
        lo, hi, e_sd1, e_sd2 = res
        best = None
        for omega in (lo, hi) if hi > lo else (lo,):
            phi_sd = omega * e_sd1 + (1.0 - omega) * e_sd2
            try:
                d = queueing.secondary_delay(lambda_p, lambda_s, s.mu_p, phi_sd)
            except UnstableError:
                d = math.inf
            if best is None or d < best[0]:
                best = (d, omega)
        return best

    best = _grid_search(solve_at, grid_step, minimize=True)
    if best is None or not math.isfinite(best[0]):
        return OptResult(math.nan, math.nan, math.nan, OptStatus.INFEASIBLE, None)
    obj, delta, omega = best
    pol = Policy(delta=delta, omega=min(max(omega, 0.0), 1.0))
    return OptResult(pol.delta, pol.omega, obj, OptStatus.OPTIMAL,
                     queueing.metrics(params, pol, lambda_p))
