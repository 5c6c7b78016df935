"""Scenario construction, the two headline experiments, and result output.

The reference topology is a dumbbell: every flow enters through its own
drop-tail access link and shares one RED-managed bottleneck.  The
numbers the experiments rely on (10 Mb/s / 20 ms bottleneck, 100 Mb/s
access links with one-way delays spread over 2..40 ms by flow index,
1000-byte payloads, RED at 5/15/20) put the RED average near its
thresholds with 22 bulk flows.  Flows 0 and 1 share the mid-range
access delay so the measured pair sees identical base RTTs; the
background flows cover the full delay range.

Two experiments mirror the headline figures:

* gain: flow 0 carries weight N, flow 1 is an unweighted reference of
  the same variant, the rest are unweighted background; the gain is the
  ratio of flow 0's to flow 1's measured throughput.
* fairness: all flows carry the same weight; the dispersion of
  RTT-normalized throughput (std/mean of throughput * base RTT)
  measures how evenly the bottleneck is shared.

Scenario files are YAML with sections for links, flows, red, duration
and seed; every field is optional except the topology and the duration.
All CSV output uses shortest-round-trip float formatting, so a repeated
run with the same seed emits identical bytes.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field

import yaml

from .aqm import RedParams
from .engine import (FlowSpec, LinkSpec, Scenario, Simulation, SimulationError,
                     s_from_ns)
from .tcp import VARIANTS, TraceRecord


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class DumbbellParams:
    """Topology and measurement defaults for the reference dumbbell."""

    bottleneck_bandwidth_bps: float = 10e6
    bottleneck_delay_s: float = 0.020
    access_bandwidth_bps: float = 100e6
    access_delay_min_s: float = 0.002
    access_delay_max_s: float = 0.040
    payload_bytes: int = 1000
    red: RedParams = field(default_factory=RedParams)
    duration_s: float = 70.0
    warmup_s: float = 10.0
    start_jitter_s: float = 1.0
    ssthresh: int = 64


BOTTLENECK = "bottleneck"


def build_dumbbell(n_flows: int, params: DumbbellParams | None = None, *,
                   variant: str = "sack", weights=None, variants=None,
                   seed: int = 0, trace: bool = False,
                   advertised_bytes=None) -> Scenario:
    """Dumbbell scenario: n access links feeding one RED bottleneck.

    Flows 0 and 1 share the mid-range access delay: they are the
    measured pair in the gain experiment, and equal base RTTs make
    their throughput ratio reflect the weights rather than an RTT
    mismatch.  The remaining flows spread deterministically over the
    configured delay range by flow index.  `weights`, `variants` and
    `advertised_bytes` may be scalars or per-flow lists.
    """
    if n_flows < 2:
        raise ScenarioError("a dumbbell needs at least two flows")
    p = params if params is not None else DumbbellParams()
    weights = _per_flow(weights if weights is not None else 1.0, n_flows, "weights")
    variants = _per_flow(variants if variants is not None else variant,
                         n_flows, "variants")
    advertised = _per_flow(advertised_bytes, n_flows, "advertised_bytes")

    links = [LinkSpec(name=BOTTLENECK, bandwidth_bps=p.bottleneck_bandwidth_bps,
                      delay_s=p.bottleneck_delay_s, queue="red", red=p.red)]
    flows = []
    span = p.access_delay_max_s - p.access_delay_min_s
    for i in range(n_flows):
        if i < 2:
            delay = p.access_delay_min_s + span / 2
        else:
            delay = p.access_delay_min_s + span * (i - 2) / max(n_flows - 3, 1)
        links.append(LinkSpec(name=f"access{i}",
                              bandwidth_bps=p.access_bandwidth_bps,
                              delay_s=delay))
        flows.append(FlowSpec(variant=variants[i], n_weight=weights[i],
                              route=(f"access{i}", BOTTLENECK),
                              start_jitter_s=p.start_jitter_s,
                              ssthresh=p.ssthresh,
                              advertised_bytes=advertised[i]))
    return Scenario(links=tuple(links), flows=tuple(flows),
                    duration_s=p.duration_s, warmup_s=p.warmup_s, seed=seed,
                    payload_bytes=p.payload_bytes, red=p.red, trace=trace)


def _per_flow(value, n: int, what: str) -> list:
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ScenarioError(f"{what}: expected {n} entries, got {len(value)}")
        return list(value)
    return [value] * n


# -- running ---------------------------------------------------------------

@dataclass(frozen=True)
class FlowResult:
    flow_id: int
    variant: str
    n_weight: float
    throughput_Bps: float       # measured-window goodput, bytes/second
    base_rtt_s: float
    delivered_bytes: int
    drops: int
    retransmits: int
    timeouts: int
    fast_retransmits: int


@dataclass(frozen=True)
class RunResult:
    seed: int
    duration_s: float
    warmup_s: float
    flows: tuple[FlowResult, ...]
    link_utilization: dict[str, float]
    trace: tuple[TraceRecord, ...] | None


def run_scenario(scenario: Scenario) -> RunResult:
    """Simulate to completion, measuring after the warmup."""
    if scenario.duration_s <= scenario.warmup_s:
        raise ScenarioError("duration must exceed warmup")
    sim = Simulation(scenario)
    sim.run_until(scenario.warmup_s)
    delivered0 = [f.delivered_bytes() for f in sim.flows]
    bits0 = {name: link.delivered_bits(sim.clock_ns)
             for name, link in sim.links.items()}
    sim.run_until(scenario.duration_s)
    window = scenario.duration_s - scenario.warmup_s

    flows = []
    for f, d0 in zip(sim.flows, delivered0):
        measured = f.delivered_bytes() - d0
        flows.append(FlowResult(
            flow_id=f.flow_id, variant=f.spec.variant, n_weight=f.spec.n_weight,
            throughput_Bps=measured / window, base_rtt_s=s_from_ns(f.base_rtt_ns),
            delivered_bytes=measured, drops=f.drops,
            retransmits=f.sender.retransmits, timeouts=f.sender.timeouts,
            fast_retransmits=f.sender.fast_retransmits))
    utilization = {
        name: (link.delivered_bits(sim.clock_ns) - bits0[name])
        / (link.bandwidth_bps * window)
        for name, link in sim.links.items()}
    trace = tuple(sim.trace) if sim.trace is not None else None
    return RunResult(seed=scenario.seed, duration_s=scenario.duration_s,
                     warmup_s=scenario.warmup_s, flows=tuple(flows),
                     link_utilization=utilization, trace=trace)


# -- gain experiment -------------------------------------------------------

@dataclass(frozen=True)
class GainSample:
    variant: str
    n_weight: float
    seed: int
    gain: float
    heavy_Bps: float
    reference_Bps: float


@dataclass(frozen=True)
class GainSummary:
    variant: str
    n_weight: float
    mean_gain: float
    std_gain: float     # sample standard deviation over seeds
    seeds: int


def run_gain_experiment(variant: str, n_grid, seeds, *, n_flows: int = 22,
                        params: DumbbellParams | None = None) -> list[GainSample]:
    """Weighted flow 0 against unweighted flow 1 over background traffic."""
    if variant not in VARIANTS:
        raise ScenarioError(f"unknown variant {variant!r}")
    if not n_grid or not seeds:
        raise ScenarioError("n_grid and seeds must be non-empty")
    samples = []
    for n in n_grid:
        for seed in seeds:
            weights = [float(n)] + [1.0] * (n_flows - 1)
            scenario = build_dumbbell(n_flows, params, variant=variant,
                                      weights=weights, seed=seed)
            result = run_scenario(scenario)
            heavy = result.flows[0].throughput_Bps
            ref = result.flows[1].throughput_Bps
            if ref <= 0:
                raise SimulationError(
                    f"reference flow starved (variant={variant}, n={n}, seed={seed})")
            samples.append(GainSample(variant=variant, n_weight=float(n),
                                      seed=seed, gain=heavy / ref,
                                      heavy_Bps=heavy, reference_Bps=ref))
    return samples


def summarize_gain(samples) -> list[GainSummary]:
    keys = sorted({(s.variant, s.n_weight) for s in samples})
    out = []
    for variant, n in keys:
        gains = [s.gain for s in samples
                 if s.variant == variant and s.n_weight == n]
        std = statistics.stdev(gains) if len(gains) > 1 else 0.0
        out.append(GainSummary(variant=variant, n_weight=n,
                               mean_gain=statistics.fmean(gains),
                               std_gain=std, seeds=len(gains)))
    return out


# -- fairness experiment ---------------------------------------------------

@dataclass(frozen=True)
class FairnessSample:
    n_weight: float
    seed: int
    std_over_mean: float


@dataclass(frozen=True)
class FairnessSummary:
    n_weight: float
    mean: float
    std: float
    seeds: int


def run_fairness_experiment(n_grid, seeds, *, variant: str = "sack",
                            n_flows: int = 22,
                            params: DumbbellParams | None = None
                            ) -> list[FairnessSample]:
    """All flows share one weight; dispersion of RTT-normalized throughput."""
    if variant not in VARIANTS:
        raise ScenarioError(f"unknown variant {variant!r}")
    if not n_grid or not seeds:
        raise ScenarioError("n_grid and seeds must be non-empty")
    samples = []
    for n in n_grid:
        for seed in seeds:
            scenario = build_dumbbell(n_flows, params, variant=variant,
                                      weights=float(n), seed=seed)
            result = run_scenario(scenario)
            samples.append(FairnessSample(
                n_weight=float(n), seed=seed,
                std_over_mean=dispersion(result.flows)))
    return samples


def dispersion(flows) -> float:
    """std/mean of throughput * base RTT; zero for a single flow."""
    normalized = [f.throughput_Bps * f.base_rtt_s for f in flows]
    if len(normalized) < 2:
        return 0.0
    mean = statistics.fmean(normalized)
    if mean <= 0:
        raise SimulationError("dispersion undefined: zero mean throughput")
    return statistics.stdev(normalized) / mean


def summarize_fairness(samples) -> list[FairnessSummary]:
    out = []
    for n in sorted({s.n_weight for s in samples}):
        vals = [s.std_over_mean for s in samples if s.n_weight == n]
        std = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out.append(FairnessSummary(n_weight=n, mean=statistics.fmean(vals),
                                   std=std, seeds=len(vals)))
    return out


# -- CSV output ------------------------------------------------------------

def write_run_csv(result: RunResult, path) -> None:
    _write_csv(path,
               ("seed", "flow_id", "variant", "n_weight", "throughput_Bps",
                "base_rtt_s", "delivered_bytes", "drops", "retransmits",
                "timeouts", "fast_retransmits"),
               [(result.seed, f.flow_id, f.variant, f.n_weight,
                 f.throughput_Bps, f.base_rtt_s, f.delivered_bytes, f.drops,
                 f.retransmits, f.timeouts, f.fast_retransmits)
                for f in result.flows])


def write_gain_csv(samples, path) -> None:
    _write_csv(path, ("variant", "n", "seed", "gain"),
               [(s.variant, s.n_weight, s.seed, s.gain) for s in samples])


def write_gain_summary_csv(summaries, path) -> None:
    _write_csv(path, ("variant", "n", "mean_gain", "std_gain", "seeds"),
               [(s.variant, s.n_weight, s.mean_gain, s.std_gain, s.seeds)
                for s in summaries])


def write_fairness_csv(samples, path) -> None:
    _write_csv(path, ("n", "seed", "std_over_mean"),
               [(s.n_weight, s.seed, s.std_over_mean) for s in samples])


def write_fairness_summary_csv(summaries, path) -> None:
    _write_csv(path, ("n", "mean_std_over_mean", "std", "seeds"),
               [(s.n_weight, s.mean, s.std, s.seeds) for s in summaries])


def emit_results(result, path) -> None:
    """Write whichever result shape was produced to a CSV file."""
    if isinstance(result, RunResult):
        write_run_csv(result, path)
        return
    items = list(result)
    if not items:
        raise ValueError("nothing to emit")
    if isinstance(items[0], GainSample):
        write_gain_csv(items, path)
    elif isinstance(items[0], GainSummary):
        write_gain_summary_csv(items, path)
    elif isinstance(items[0], FairnessSample):
        write_fairness_csv(items, path)
    elif isinstance(items[0], FairnessSummary):
        write_fairness_summary_csv(items, path)
    else:
        raise TypeError(f"cannot emit {type(items[0]).__name__} rows")


def _write_csv(path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


# -- scenario files --------------------------------------------------------

_LINK_KEYS = {"name", "bandwidth", "delay", "queue", "limit", "red"}
_FLOW_KEYS = {"variant", "route", "n", "start", "jitter", "stop",
              "bulk_bytes", "ssthresh", "advertised_bytes"}
_TOP_KEYS = {"links", "flows", "duration", "warmup", "seed", "payload",
             "red", "trace"}


def load_scenario(path) -> Scenario:
    """Read a YAML scenario file (see scenario_from_dict for the schema)."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return scenario_from_dict(data)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a Scenario from plain mappings.

    Required keys: links (list of {name, bandwidth, delay, queue?,
    limit?, red?}), flows (list of {variant, route, n?, start?, jitter?,
    stop?, bulk_bytes?, ssthresh?, advertised_bytes?}) and duration.
    Optional top-level keys: warmup, seed, payload, red, trace.
    Bandwidths are bits/second, delays and times are seconds.
    """
    _check_keys(data, _TOP_KEYS, "scenario")
    for key in ("links", "flows", "duration"):
        if key not in data:
            raise ScenarioError(f"scenario is missing required key {key!r}")

    links = []
    for i, entry in enumerate(_as_list(data["links"], "links")):
        _check_keys(entry, _LINK_KEYS, f"links[{i}]")
        try:
            links.append(LinkSpec(
                name=str(entry["name"]),
                bandwidth_bps=_as_float(entry["bandwidth"], f"links[{i}].bandwidth"),
                delay_s=_as_float(entry["delay"], f"links[{i}].delay"),
                queue=str(entry.get("queue", "fifo")),
                limit=int(entry.get("limit", 1000)),
                red=_red_from(entry["red"]) if "red" in entry else None))
        except KeyError as exc:
            raise ScenarioError(f"links[{i}] is missing {exc}") from exc

    flows = []
    for i, entry in enumerate(_as_list(data["flows"], "flows")):
        _check_keys(entry, _FLOW_KEYS, f"flows[{i}]")
        try:
            route = entry["route"]
        except KeyError as exc:
            raise ScenarioError(f"flows[{i}] is missing {exc}") from exc
        variant = str(entry.get("variant", "sack"))
        if variant not in VARIANTS:
            raise ScenarioError(f"flows[{i}]: unknown variant {variant!r}")
        flows.append(FlowSpec(
            variant=variant,
            route=tuple(str(x) for x in _as_list(route, f"flows[{i}].route")),
            n_weight=_as_float(entry.get("n", 1.0), f"flows[{i}].n"),
            start_s=_as_float(entry.get("start", 0.0), f"flows[{i}].start"),
            start_jitter_s=_as_float(entry.get("jitter", 0.0), f"flows[{i}].jitter"),
            stop_s=None if entry.get("stop") is None
            else _as_float(entry["stop"], f"flows[{i}].stop"),
            bulk_bytes=None if entry.get("bulk_bytes") is None
            else int(entry["bulk_bytes"]),
            ssthresh=int(entry.get("ssthresh", 64)),
            advertised_bytes=None if entry.get("advertised_bytes") is None
            else int(entry["advertised_bytes"])))

    scenario = Scenario(
        links=tuple(links), flows=tuple(flows),
        duration_s=_as_float(data["duration"], "duration"),
        warmup_s=_as_float(data.get("warmup", 0.0), "warmup"),
        seed=int(data.get("seed", 0)),
        payload_bytes=int(data.get("payload", 1000)),
        red=_red_from(data["red"]) if "red" in data else RedParams(),
        trace=bool(data.get("trace", False)))
    if scenario.duration_s <= scenario.warmup_s:
        raise ScenarioError("duration must exceed warmup")
    return scenario


def _red_from(entry) -> RedParams:
    if not isinstance(entry, dict):
        raise ScenarioError("red section must be a mapping")
    _check_keys(entry, {"thresh", "maxthresh", "limit", "ewma_weight",
                        "max_drop_prob"}, "red")
    defaults = RedParams()
    try:
        return RedParams(
            thresh=_as_float(entry.get("thresh", defaults.thresh), "red.thresh"),
            maxthresh=_as_float(entry.get("maxthresh", defaults.maxthresh),
                                "red.maxthresh"),
            limit=int(entry.get("limit", defaults.limit)),
            ewma_weight=_as_float(entry.get("ewma_weight", defaults.ewma_weight),
                                  "red.ewma_weight"),
            max_drop_prob=_as_float(entry.get("max_drop_prob",
                                              defaults.max_drop_prob),
                                    "red.max_drop_prob"))
    except ValueError as exc:
        raise ScenarioError(f"invalid red parameters: {exc}") from exc


def _check_keys(entry, allowed: set, where: str) -> None:
    if not isinstance(entry, dict):
        raise ScenarioError(f"{where} must be a mapping")
    unknown = set(entry) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")


def _as_list(value, where: str) -> list:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{where} must be a non-empty list")
    return value


def _as_float(value, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: expected a number, got {value!r}") from exc
