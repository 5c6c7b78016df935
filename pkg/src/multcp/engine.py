"""Deterministic discrete-event network simulator.

Time is an integer nanosecond clock; events are dispatched from a heap
ordered by (time, insertion sequence), so equal-time events run in FIFO
order and identical scenarios replay identically.  A single seeded RNG
drives every random choice (flow start jitter, then RED decisions) in a
fixed draw order.

Links come in two forms.  A FifoLink is a drop-tail queue modelled
analytically: each admitted packet costs one arrival event, scheduled at
serialisation-end plus propagation, with the backlog tracked as a
busy-until horizon.  A RedLink owns a real RedQueue and explicit
transmit-complete events, because drop decisions must see the actual
queue occupancy at each arrival.

Acks are 40 bytes, never queued and never dropped: the return path is
pure delay, the sum of the forward links' propagation delays.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .aqm import RedParams, RedQueue
from .tcp import TcpReceiver, TcpSender, TraceRecord

NS_PER_SEC = 1_000_000_000
ACK_BYTES = 40

# event kinds
_FLOW_START = 0
_ARRIVAL = 1
_ACK_ARRIVAL = 2
_TX_DONE = 3
_TIMER = 4
_FLOW_STOP = 5


def ns_from_s(seconds: float) -> int:
    return int(round(seconds * NS_PER_SEC))


def s_from_ns(t_ns: int) -> float:
    return t_ns / NS_PER_SEC


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinkSpec:
    """One unidirectional link.  queue is "fifo" (drop-tail) or "red"."""

    name: str
    bandwidth_bps: float
    delay_s: float
    queue: str = "fifo"
    limit: int = 1000           # packets of backlog before tail drop
    red: RedParams | None = None    # overrides the scenario default for red queues


@dataclass(frozen=True)
class FlowSpec:
    """One sender/receiver pair and its forward route (link names)."""

    variant: str
    route: tuple[str, ...]
    n_weight: float = 1.0
    start_s: float = 0.0
    start_jitter_s: float = 0.0
    stop_s: float | None = None
    bulk_bytes: int | None = None
    ssthresh: int = 64
    advertised_bytes: int | None = None     # receive-buffer cap


@dataclass(frozen=True)
class Scenario:
    links: tuple[LinkSpec, ...]
    flows: tuple[FlowSpec, ...]
    duration_s: float
    warmup_s: float = 0.0
    seed: int = 0
    payload_bytes: int = 1000
    red: RedParams = field(default_factory=RedParams)
    trace: bool = False


class Packet:
    __slots__ = ("flow_id", "seq", "size", "hop")

    def __init__(self, flow_id: int, seq: int, size: int) -> None:
        self.flow_id = flow_id
        self.seq = seq
        self.size = size
        self.hop = 0    # index of the next link on the route


class FifoLink:
    """Drop-tail link with analytic FIFO service (one event per packet)."""

    def __init__(self, spec: LinkSpec) -> None:
        self.name = spec.name
        self.bandwidth_bps = float(spec.bandwidth_bps)
        self.delay_ns = ns_from_s(spec.delay_s)
        self.limit = spec.limit
        self.busy_until_ns = 0
        self.bits_admitted = 0
        self.drops = 0

    def ser_ns(self, size_bytes: int) -> int:
        return int(round(size_bytes * 8 * NS_PER_SEC / self.bandwidth_bps))

    def offer(self, sim: "Simulation", pkt: Packet, now_ns: int) -> bool:
        ser = self.ser_ns(pkt.size)
        if self.busy_until_ns - now_ns > self.limit * ser:
            self.drops += 1
            return False
        start = max(now_ns, self.busy_until_ns)
        self.busy_until_ns = start + ser
        self.bits_admitted += pkt.size * 8
        sim.schedule(self.busy_until_ns + self.delay_ns, _ARRIVAL, pkt)
        return True

    def delivered_bits(self, now_ns: int) -> float:
        """Bits fully serialised by `now`; the backlog drains at line rate."""
        backlog_ns = max(0, self.busy_until_ns - now_ns)
        return self.bits_admitted - self.bandwidth_bps * backlog_ns / NS_PER_SEC

    def queued_packets(self) -> int:
        return 0    # backlog lives in already-scheduled arrival events


class RedLink:
    """Link whose queue is RED-managed; service is event-driven."""

    def __init__(self, spec: LinkSpec, params: RedParams, rng: random.Random,
                 typical_packet_bytes: int) -> None:
        self.name = spec.name
        self.bandwidth_bps = float(spec.bandwidth_bps)
        self.delay_ns = ns_from_s(spec.delay_s)
        self.queue = RedQueue(params, rng,
                              idle_pkt_time_ns=self.ser_ns(typical_packet_bytes))
        self.in_service: Packet | None = None
        self.bits_forwarded = 0
        self.drops = 0

    def ser_ns(self, size_bytes: int) -> int:
        return int(round(size_bytes * 8 * NS_PER_SEC / self.bandwidth_bps))

    def offer(self, sim: "Simulation", pkt: Packet, now_ns: int) -> bool:
        if not self.queue.enqueue(pkt, now_ns):
            self.drops += 1
            return False
        if self.in_service is None:
            self._begin_service(sim, now_ns)
        return True

    def _begin_service(self, sim: "Simulation", now_ns: int) -> None:
        pkt = self.queue.dequeue(now_ns)
        if pkt is None:
            return
        self.in_service = pkt
        sim.schedule(now_ns + self.ser_ns(pkt.size), _TX_DONE, self)

    def on_tx_done(self, sim: "Simulation", now_ns: int) -> None:
        pkt = self.in_service
        self.in_service = None
        self.bits_forwarded += pkt.size * 8
        sim.schedule(now_ns + self.delay_ns, _ARRIVAL, pkt)
        self._begin_service(sim, now_ns)

    def delivered_bits(self, now_ns: int) -> float:
        return float(self.bits_forwarded)

    def queued_packets(self) -> int:
        return len(self.queue) + (1 if self.in_service is not None else 0)


class Flow:
    """Binds a sender, a receiver, a forward route and counters."""

    def __init__(self, flow_id: int, spec: FlowSpec, route: list,
                 payload_bytes: int, trace: list[TraceRecord] | None) -> None:
        self.flow_id = flow_id
        self.spec = spec
        self.route = route
        self.payload_bytes = payload_bytes
        self.reverse_delay_ns = sum(l.delay_ns for l in route)
        self.base_rtt_ns = sum(l.ser_ns(payload_bytes) + l.delay_ns for l in route) \
            + self.reverse_delay_ns
        bulk = None
        if spec.bulk_bytes is not None:
            bulk = -(-spec.bulk_bytes // payload_bytes)
        adv = None
        if spec.advertised_bytes is not None:
            adv = spec.advertised_bytes // payload_bytes
        self.sender = TcpSender(spec.variant, spec.n_weight, flow_id=flow_id,
                                initial_ssthresh=spec.ssthresh,
                                advertised=adv, bulk_segments=bulk, trace=trace)
        self.receiver = TcpReceiver(sack_enabled=(spec.variant == "sack"))
        self.sent_packets = 0
        self.arrived_packets = 0
        self.drops = 0
        self.completion_ns: int | None = None
        self._timer_event_ns: int | None = None

    def delivered_segments(self) -> int:
        return self.receiver.cum_ack

    def delivered_bytes(self) -> int:
        return self.receiver.cum_ack * self.payload_bytes


@dataclass
class FlowSnapshot:
    flow_id: int
    variant: str
    n_weight: float
    delivered_bytes: int
    sent_packets: int
    arrived_packets: int
    drops: int
    retransmits: int
    timeouts: int
    fast_retransmits: int
    base_rtt_s: float
    completion_s: float | None


class Simulation:
    """Event loop over a Scenario.  run_until() may be called repeatedly."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.rng = random.Random(scenario.seed)
        self.clock_ns = 0
        self._heap: list = []
        self._eseq = 0
        self.trace: list[TraceRecord] | None = [] if scenario.trace else None

        self.links: dict[str, FifoLink | RedLink] = {}
        for spec in scenario.links:
            if spec.queue == "red":
                params = spec.red if spec.red is not None else scenario.red
                self.links[spec.name] = RedLink(spec, params, self.rng,
                                                scenario.payload_bytes)
            elif spec.queue == "fifo":
                self.links[spec.name] = FifoLink(spec)
            else:
                raise SimulationError(f"unknown queue type {spec.queue!r}")

        self.flows: list[Flow] = []
        for i, fs in enumerate(scenario.flows):
            for name in fs.route:
                if name not in self.links:
                    raise SimulationError(f"flow {i} routes over unknown link {name!r}")
            route = [self.links[name] for name in fs.route]
            self.flows.append(Flow(i, fs, route, scenario.payload_bytes, self.trace))

        # start jitters are drawn up front, in flow order, so later RED
        # draws cannot disturb them
        for flow in self.flows:
            fs = flow.spec
            start = fs.start_s + self.rng.uniform(0.0, fs.start_jitter_s)
            self.schedule(ns_from_s(start), _FLOW_START, flow.flow_id)
            if fs.stop_s is not None:
                self.schedule(ns_from_s(fs.stop_s), _FLOW_STOP, flow.flow_id)

    # -- event plumbing ---------------------------------------------------

    def schedule(self, time_ns: int, kind: int, payload) -> None:
        if time_ns < self.clock_ns:
            raise SimulationError(
                f"event scheduled in the past ({time_ns} < {self.clock_ns})")
        heapq.heappush(self._heap, (time_ns, self._eseq, kind, payload))
        self._eseq += 1

    def run_until(self, t_s: float) -> "Simulation":
        """Process every event with time <= t_s, then park the clock there."""
        end_ns = ns_from_s(t_s)
        heap = self._heap
        while heap and heap[0][0] <= end_ns:
            time_ns, _, kind, payload = heapq.heappop(heap)
            self.clock_ns = time_ns
            if kind == _ARRIVAL:
                self._on_arrival(payload, time_ns)
            elif kind == _ACK_ARRIVAL:
                self._on_ack_arrival(payload, time_ns)
            elif kind == _TX_DONE:
                payload.on_tx_done(self, time_ns)
            elif kind == _TIMER:
                self._on_timer(payload, time_ns)
            elif kind == _FLOW_START:
                flow = self.flows[payload]
                self._dispatch_sends(flow, flow.sender.start(time_ns), time_ns)
                self._sync_timer(flow)
            elif kind == _FLOW_STOP:
                self.flows[payload].sender.active = False
        if end_ns > self.clock_ns:
            self.clock_ns = end_ns
        return self

    # -- handlers ---------------------------------------------------------

    def _on_arrival(self, pkt: Packet, now_ns: int) -> None:
        flow = self.flows[pkt.flow_id]
        pkt.hop += 1
        if pkt.hop < len(flow.route):
            if not flow.route[pkt.hop].offer(self, pkt, now_ns):
                flow.drops += 1
            return
        flow.arrived_packets += 1
        ack, blocks = flow.receiver.on_data(pkt.seq)
        self.schedule(now_ns + flow.reverse_delay_ns, _ACK_ARRIVAL,
                      (pkt.flow_id, ack, tuple(blocks)))

    def _on_ack_arrival(self, payload, now_ns: int) -> None:
        flow_id, ack, blocks = payload
        flow = self.flows[flow_id]
        sends = flow.sender.on_ack(ack, blocks, now_ns)
        self._dispatch_sends(flow, sends, now_ns)
        self._sync_timer(flow)
        if flow.completion_ns is None and flow.sender.done():
            flow.completion_ns = now_ns

    def _on_timer(self, flow: Flow, now_ns: int) -> None:
        flow._timer_event_ns = None
        sends = flow.sender.on_timer_check(now_ns)
        self._dispatch_sends(flow, sends, now_ns)
        self._sync_timer(flow)

    def _dispatch_sends(self, flow: Flow, sends: list[tuple[int, bool]],
                        now_ns: int) -> None:
        for seq, _is_retx in sends:
            pkt = Packet(flow.flow_id, seq, flow.payload_bytes)
            flow.sent_packets += 1
            if not flow.route[0].offer(self, pkt, now_ns):
                flow.drops += 1

    def _sync_timer(self, flow: Flow) -> None:
        deadline = flow.sender.timer_deadline_ns
        if deadline is not None and (flow._timer_event_ns is None
                                     or deadline < flow._timer_event_ns):
            self.schedule(deadline, _TIMER, flow)
            flow._timer_event_ns = deadline

    # -- inspection -------------------------------------------------------

    def snapshot(self) -> list[FlowSnapshot]:
        out = []
        for f in self.flows:
            out.append(FlowSnapshot(
                flow_id=f.flow_id, variant=f.spec.variant, n_weight=f.spec.n_weight,
                delivered_bytes=f.delivered_bytes(), sent_packets=f.sent_packets,
                arrived_packets=f.arrived_packets, drops=f.drops,
                retransmits=f.sender.retransmits, timeouts=f.sender.timeouts,
                fast_retransmits=f.sender.fast_retransmits,
                base_rtt_s=s_from_ns(f.base_rtt_ns),
                completion_s=None if f.completion_ns is None
                else s_from_ns(f.completion_ns)))
        return out

    def in_network_counts(self) -> dict[int, int]:
        """Data packets currently queued or in flight, per flow."""
        counts = {f.flow_id: 0 for f in self.flows}
        for _, _, kind, payload in self._heap:
            if kind == _ARRIVAL:
                counts[payload.flow_id] += 1
        for link in self.links.values():
            if isinstance(link, RedLink):
                for pkt in link.queue.items:
                    counts[pkt.flow_id] += 1
                if link.in_service is not None:
                    counts[link.in_service.flow_id] += 1
        return counts

    def check_conservation(self) -> None:
        """Every sent packet is delivered, dropped, or still in the network."""
        in_net = self.in_network_counts()
        for f in self.flows:
            total = f.arrived_packets + f.drops + in_net[f.flow_id]
            if f.sent_packets != total:
                raise SimulationError(
                    f"flow {f.flow_id}: sent {f.sent_packets} != "
                    f"arrived {f.arrived_packets} + dropped {f.drops} "
                    f"+ in-network {in_net[f.flow_id]}")
