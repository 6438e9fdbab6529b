"""Command-line front end: analysis, optimization, simulation, sweeps.

Results are written as CSV with a fixed header, one row per grid point and
protocol arm; quantities a mode does not produce stay empty. Grid points that
cannot be stabilized become rows with status=infeasible rather than failures.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import optimize, queueing
from .model import (Arrivals, InfeasibleError, ParameterError, Policy,
                    Protocol, SystemParams, UnstableError)
from .simulate import SimConfig, SimStats, simulate as run_simulation

MODES = ("analyze", "optimize-throughput", "optimize-delay", "simulate", "sweep")

CSV_HEADER = [
    "rate_R", "lambda_p", "lambda_s", "protocol", "delta_star", "omega_star",
    "mu_s_analytic", "mu_s_sim", "ci_mu_s", "D_s_analytic", "D_s_sim", "ci_D_s",
    "D_p_analytic", "D_p_sim", "ci_D_p", "status",
]


class SpecError(ValueError):
    """Experiment specification is invalid; message names the field."""


@dataclass
class ExperimentSpec:
    mode: str = ""
    rate: list = field(default_factory=list)        # spectral loads to sweep
    lambda_p: list = field(default_factory=list)
    lambda_s: float = 0.0
    delay_cap: float | None = None
    delta: float = 0.5
    omega: float = 0.5
    protocol: str = ""                              # proposed | pcr | both
    grid_step: float = 1e-3
    seed: int = 42
    slots: int = 1_000_000
    reps: int = 10
    warmup: int | None = None                       # default 10% of slots
    out: str | None = None                          # None writes to stdout
    workers: int = 1
    tau_frac: float = 0.1
    slot_duration: float = 1.0
    bandwidth: float = 1.0
    power_p: float = 1e-10
    power_s: float = 1e-9
    noise: float = 1e-11
    sigma_p_pd: float = 1.0
    sigma_p_s: float = 1.0
    sigma_s_sd: float = 1.0
    sigma_s_pd: float = 1.0

    def sim_config(self) -> SimConfig:
        return SimConfig(n_slots=self.slots, n_replications=self.reps,
                             seed=self.seed, warmup_slots=self.warmup)

    def params_at(self, rate: float) -> SystemParams:
        return SystemParams(
            slot_duration=self.slot_duration,
            sensing_duration=self.tau_frac * self.slot_duration,
            bandwidth=self.bandwidth,
            packet_bits=rate * self.slot_duration * self.bandwidth,
            power_primary=self.power_p,
            power_secondary=self.power_s,
            noise=self.noise,
            gain_p_pd=self.sigma_p_pd,
            gain_p_s=self.sigma_p_s,
            gain_s_sd=self.sigma_s_sd,
            gain_s_pd=self.sigma_s_pd,
        )


_FLOAT_KEYS = ("lambda_s", "delay_cap", "delta", "omega", "grid_step", "tau_frac",
               "slot_duration", "bandwidth", "power_p", "power_s", "noise",
               "sigma_p_pd", "sigma_p_s", "sigma_s_sd", "sigma_s_pd")
_INT_KEYS = ("seed", "slots", "reps", "warmup", "workers")
_LIST_KEYS = ("rate", "lambda_p")
_STR_KEYS = ("mode", "protocol", "out")
# convenience keys that expand to several spec fields
_EXTRA_KEYS = ("gamma_p", "gamma_s", "sigma")


def _parse_number(key: str, text: str, cast):
    try:
        value = cast(text)
    except ValueError:
        raise SpecError(f"unparsable number for '{key}': {text!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise SpecError(f"non-finite value for '{key}': {text!r}")
    return value


def _parse_list(key: str, text: str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    return [_parse_number(key, t, float) for t in items]


def read_config_file(path: str) -> dict:
    """Flat key=value text config; '#' starts a comment, lists are
    comma-separated. Unknown keys are rejected by name."""
    raw = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise SpecError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        known = _FLOAT_KEYS + _INT_KEYS + _LIST_KEYS + _STR_KEYS + _EXTRA_KEYS
        if key not in known:
            raise SpecError(f"{path}:{lineno}: unknown key '{key}'")
        raw[key] = value
    return raw


def _default_rates(mode: str) -> list:
    if mode in ("sweep", "optimize-throughput", "optimize-delay"):
        return [float(r) for r in np.linspace(0.5, 3.0, 21)]
    return [1.0]


def _default_lambda_p(mode: str) -> list:
    return [0.5, 0.8] if mode == "sweep" else [0.5]


def parse_spec(config_path: str | None, overrides: dict) -> ExperimentSpec:
    """Merge config file and flag overrides into a validated spec.

    ``overrides`` maps spec keys to already-typed values (None = not given);
    flags win over file values, defaults fill the rest.
    """
    raw = read_config_file(config_path) if config_path else {}
    values: dict = {}
    for key, text in raw.items():
        if key in _LIST_KEYS:
            values[key] = _parse_list(key, text)
        elif key in _FLOAT_KEYS or key in _EXTRA_KEYS:
            values[key] = _parse_number(key, text, float)
        elif key in _INT_KEYS:
            values[key] = _parse_number(key, text, int)
        else:
            values[key] = text
    for key, val in overrides.items():
        if val is not None:
            values[key] = val

    # convenience expansions: SNRs instead of powers, one sigma for all links
    if "sigma" in values:
        s = values.pop("sigma")
        for key in ("sigma_p_pd", "sigma_p_s", "sigma_s_sd", "sigma_s_pd"):
            values.setdefault(key, s)
    noise = values.get("noise", 1e-11)
    if "gamma_p" in values:
        values["power_p"] = values.pop("gamma_p") * noise
    if "gamma_s" in values:
        values["power_s"] = values.pop("gamma_s") * noise

    mode = values.get("mode", "")
    if not mode:
        raise SpecError("missing 'mode' (config key or subcommand)")
    if mode not in MODES:
        raise SpecError(f"unknown mode '{mode}' (choose from {', '.join(MODES)})")
    values.setdefault("rate", _default_rates(mode))
    values.setdefault("lambda_p", _default_lambda_p(mode))
    values.setdefault("protocol", "both" if mode in ("sweep", "optimize-delay") else "proposed")

    spec = ExperimentSpec(**values)
    _validate_spec(spec)
    return spec


def _validate_spec(spec: ExperimentSpec) -> None:
    if not spec.rate:
        raise SpecError("empty 'rate' list")
    if not spec.lambda_p:
        raise SpecError("empty 'lambda_p' list")
    for r in spec.rate:
        if r <= 0:
            raise SpecError(f"'rate' entries must be > 0, got {r}")
    for lp in spec.lambda_p:
        if not 0.0 <= lp <= 1.0:
            raise SpecError(f"'lambda_p' entries must be in [0,1], got {lp}")
    if not 0.0 <= spec.lambda_s <= 1.0:
        raise SpecError(f"'lambda_s' must be in [0,1], got {spec.lambda_s}")
    if spec.mode == "optimize-delay" and spec.delay_cap is None:
        raise SpecError("mode optimize-delay requires 'delay_cap'")
    if spec.delay_cap is not None and spec.delay_cap <= 0:
        raise SpecError(f"'delay_cap' must be > 0, got {spec.delay_cap}")
    for name in ("delta", "omega"):
        v = getattr(spec, name)
        if not 0.0 <= v <= 1.0:
            raise SpecError(f"'{name}' must be in [0,1], got {v}")
    if not 0.0 < spec.grid_step <= 0.5:
        raise SpecError(f"'grid_step' must be in (0, 0.5], got {spec.grid_step}")
    if spec.protocol not in ("proposed", "pcr", "both"):
        raise SpecError(f"'protocol' must be proposed|pcr|both, got '{spec.protocol}'")
    if spec.slots < 2:
        raise SpecError(f"'slots' must be >= 2, got {spec.slots}")
    if spec.reps < 1:
        raise SpecError(f"'reps' must be >= 1, got {spec.reps}")
    if spec.workers < 1:
        raise SpecError(f"'workers' must be >= 1, got {spec.workers}")
    if spec.warmup is None:
        spec.warmup = spec.slots // 10
    if not 0 <= spec.warmup < spec.slots:
        raise SpecError(f"'warmup' must be in [0, slots), got {spec.warmup}")
    if not 0.0 <= spec.tau_frac < 1.0:
        raise SpecError(f"'tau_frac' must be in [0,1), got {spec.tau_frac}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _arms(spec: ExperimentSpec) -> list:
    if spec.protocol == "both":
        return [Protocol.PROPOSED, Protocol.PCR]
    return [Protocol.PROPOSED if spec.protocol == "proposed" else Protocol.PCR]


def _blank_row(rate: float, lam_p: float, spec: ExperimentSpec, protocol: Protocol) -> dict:
    return {
        "rate_R": rate, "lambda_p": lam_p, "lambda_s": spec.lambda_s,
        "protocol": protocol.value, "status": "ok",
    }


def _analytic_fields(row: dict, params: SystemParams, policy: Policy,
                     lam_p: float, lam_s: float) -> None:
    """Fill analytic mu_s / D_s / D_p at a fixed policy where defined.

    The secondary-delay formula models the randomized split, so it is left
    empty under PCR (whose own queue is priority-coupled to the relay queue);
    the primary-delay formula holds for both since the PCR relay queue is
    served on the full band in every idle slot.
    """
    m = queueing.metrics(params, policy, lam_p)
    out_pd, _ = queueing.primary_outages(params)
    row["mu_s_analytic"] = m.mu_s
    if policy.protocol is Protocol.PROPOSED:
        try:
            row["D_s_analytic"] = queueing.secondary_delay(lam_p, lam_s, m.mu_p, m.phi_sd)
        except UnstableError:
            pass
    try:
        row["D_p_analytic"] = queueing.primary_delay(lam_p, m.mu_p, out_pd, m.phi_pd)
    except UnstableError:
        pass


def _sim_fields(row: dict, stats: SimStats) -> None:
    row["mu_s_sim"] = stats.delivered_secondary_rate
    row["ci_mu_s"] = stats.ci["delivered_secondary_rate"]
    row["D_s_sim"] = stats.mean_delay_secondary
    row["ci_D_s"] = stats.ci["mean_delay_secondary"]
    row["D_p_sim"] = stats.mean_delay_primary_e2e
    row["ci_D_p"] = stats.ci["mean_delay_primary_e2e"]


def _point_rows(spec: ExperimentSpec, rate: float, lam_p: float) -> list:
    """All CSV rows of one (rate, lambda_p) grid point, one per protocol arm."""
    params = spec.params_at(rate)
    arrivals = Arrivals(lambda_p=lam_p, lambda_s=spec.lambda_s)
    rows = []
    for protocol in _arms(spec):
        row = _blank_row(rate, lam_p, spec, protocol)
        try:
            if spec.mode == "analyze":
                policy = (Policy(spec.delta, spec.omega) if protocol is Protocol.PROPOSED
                          else Policy(protocol=Protocol.PCR))
                if protocol is Protocol.PROPOSED:
                    row["delta_star"] = spec.delta
                    row["omega_star"] = spec.omega
                _analytic_fields(row, params, policy, lam_p, spec.lambda_s)
            elif spec.mode in ("optimize-throughput", "sweep"):
                if protocol is Protocol.PROPOSED:
                    res = optimize.max_secondary_throughput(params, lam_p, spec.grid_step)
                    if res.status is optimize.OptStatus.INFEASIBLE:
                        row["status"] = "infeasible"
                    else:
                        row["delta_star"] = res.delta_star
                        row["omega_star"] = res.omega_star
                        row["mu_s_analytic"] = res.objective
                else:
                    row["mu_s_analytic"] = optimize.pcr_throughput(params, lam_p)
                    eq = optimize.pcr_equivalent_policy(params, lam_p)
                    row["delta_star"] = eq.delta
                    row["omega_star"] = eq.omega
            elif spec.mode == "optimize-delay":
                if protocol is Protocol.PROPOSED:
                    res = optimize.min_secondary_delay(
                        params, lam_p, spec.lambda_s, spec.delay_cap, spec.grid_step)
                    if res.status is optimize.OptStatus.INFEASIBLE:
                        row["status"] = "infeasible"
                    else:
                        m = res.metrics_at_opt
                        out_pd, _ = queueing.primary_outages(params)
                        row["delta_star"] = res.delta_star
                        row["omega_star"] = res.omega_star
                        row["mu_s_analytic"] = m.mu_s
                        row["D_s_analytic"] = res.objective
                        row["D_p_analytic"] = queueing.primary_delay(
                            lam_p, m.mu_p, out_pd, m.phi_pd)
                else:
                    # no printed secondary-delay formula for the priority
                    # baseline: its capacity gates feasibility, D_s comes from
                    # simulation (the primary-delay formula still applies)
                    cap_mu_s = optimize.pcr_throughput(params, lam_p)
                    row["mu_s_analytic"] = cap_mu_s
                    if spec.lambda_s > cap_mu_s:
                        row["status"] = "infeasible"
                    else:
                        m = queueing.metrics(params, Policy(protocol=Protocol.PCR),
                                             lam_p)
                        out_pd, _ = queueing.primary_outages(params)
                        row["D_p_analytic"] = queueing.primary_delay(
                            lam_p, m.mu_p, out_pd, m.phi_pd)
                        stats = run_simulation(params, Policy(protocol=Protocol.PCR),
                                             arrivals, spec.sim_config())
                        _sim_fields(row, stats)
            elif spec.mode == "simulate":
                policy = (Policy(spec.delta, spec.omega) if protocol is Protocol.PROPOSED
                          else Policy(protocol=Protocol.PCR))
                if protocol is Protocol.PROPOSED:
                    row["delta_star"] = spec.delta
                    row["omega_star"] = spec.omega
                try:
                    _analytic_fields(row, params, policy, lam_p, spec.lambda_s)
                except UnstableError:
                    pass  # simulation still runs; analytic fields stay empty
                stats = run_simulation(params, policy, arrivals, spec.sim_config())
                _sim_fields(row, stats)
        except (UnstableError, InfeasibleError):
            row["status"] = "infeasible"
        rows.append(row)
    return rows


def run(spec: ExperimentSpec, stream=None) -> int:
    """Execute the experiment and write the CSV; returns the exit code."""
    points = [(rate, lam_p) for rate in spec.rate for lam_p in spec.lambda_p]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_point = list(pool.map(_point_rows, [spec] * len(points),
                                      [p[0] for p in points], [p[1] for p in points]))
    else:
        per_point = [_point_rows(spec, rate, lam_p) for rate, lam_p in points]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rows in per_point:
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in CSV_HEADER])
    text = buf.getvalue()
    if spec.out:
        with open(spec.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    else:
        sys.stdout.write(text)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # validation errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SpecError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bandsplit",
        description="Band-splitting cognitive-radio analysis, optimization and simulation.",
    )
    parser.add_argument("mode", nargs="?", choices=MODES,
                        help="experiment mode (may also come from the config file)")
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument("--out", metavar="PATH", help="output CSV path (default stdout)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--slots", type=int, help="simulated slots per replication")
    parser.add_argument("--reps", type=int, help="number of replications")
    parser.add_argument("--warmup", type=int, help="warmup slots excluded from statistics")
    parser.add_argument("--grid-step", type=float, dest="grid_step")
    parser.add_argument("--rate", help="comma-separated spectral loads")
    parser.add_argument("--lambda-p", dest="lambda_p", help="comma-separated primary arrival rates")
    parser.add_argument("--lambda-s", dest="lambda_s", type=float)
    parser.add_argument("--delay-cap", dest="delay_cap", type=float)
    parser.add_argument("--protocol", choices=("proposed", "pcr", "both"))
    parser.add_argument("--delta", type=float)
    parser.add_argument("--omega", type=float)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--tau-frac", dest="tau_frac", type=float)
    parser.add_argument("--gamma-p", dest="gamma_p", type=float, help="primary SNR (sets power_p = gamma_p * noise)")
    parser.add_argument("--gamma-s", dest="gamma_s", type=float, help="secondary SNR")
    parser.add_argument("--power-p", dest="power_p", type=float)
    parser.add_argument("--power-s", dest="power_s", type=float)
    parser.add_argument("--noise", type=float)
    parser.add_argument("--sigma", type=float, help="mean channel gain for all four links")
    parser.add_argument("--sigma-p-pd", dest="sigma_p_pd", type=float)
    parser.add_argument("--sigma-p-s", dest="sigma_p_s", type=float)
    parser.add_argument("--sigma-s-sd", dest="sigma_s_sd", type=float)
    parser.add_argument("--sigma-s-pd", dest="sigma_s_pd", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        overrides = dict(vars(ns))
        overrides.pop("config", None)
        for key in ("rate", "lambda_p"):
            if overrides.get(key) is not None:
                overrides[key] = _parse_list(key, overrides[key])
        spec = parse_spec(ns.config, overrides)
    except (SpecError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(spec)
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
