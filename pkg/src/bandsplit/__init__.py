"""Band-splitting cooperative cognitive radio: analysis, optimization,
simulation."""

from .model import (Arrivals, InfeasibleError, ParameterError, Policy,
                    Protocol, Rates, SystemParams, UnstableError,
                    normalized_params, validate)
from .outage import LinkBudget, outage_prob, success_prob
from .queueing import (DelayCoeffs, QueueMetrics, StabilityVerdict,
                       delay_coeffs, is_stable, metrics, primary_delay,
                       primary_idle_prob, primary_outages,
                       primary_service_rate, relay_arrival_rate,
                       secondary_delay, success_mixture)
from .optimize import (OptResult, OptStatus, ReducedLP, delay_feasible_interval,
                       deterministic_delta_star, kappa, lambda_p_max,
                       max_secondary_throughput, min_secondary_delay,
                       omega_star_throughput, pcr_equivalent_policy,
                       pcr_throughput, r_max, reduced_lp)
from .simulate import (ProtocolComparison, SimConfig, SimStats,
                       compare_protocols, simulate)

__version__ = "0.1.0"
