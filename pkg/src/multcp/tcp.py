"""MulTCP congestion control and the sender/receiver state machines.

A MulTCP connection with weight N behaves like the aggregate of N
ordinary TCP connections: slow start opens the window by two segments
per ack up to a crossover point, congestion avoidance grows it by N
per round trip, and each loss backs the window off by a factor
(N - 1/2) / N instead of 1/2.  With N = 1 every rule reduces to the
standard behaviour.

Loss recovery comes in four flavours (tahoe, reno, newreno, sack) that
share the window rules above and differ only in how they repair holes.

The transition functions at the top operate on a bare CongestionState
and are usable without any simulator; TcpSender drives them and adds
sequencing, retransmission and timer logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

NS_PER_SEC = 1_000_000_000

VARIANTS = ("tahoe", "reno", "newreno", "sack")

SLOW_START = "slow-start"
CONGESTION_AVOIDANCE = "congestion-avoidance"
FAST_RECOVERY = "fast-recovery"

# retransmission timer, Jacobson/Karn style
RTO_INITIAL_NS = 1_000_000_000
RTO_MIN_NS = 200_000_000
RTO_MAX_NS = 60_000_000_000
RTO_GRANULARITY_NS = 1_000_000
DUPACK_THRESHOLD = 3


def slow_start_crossover(n_weight: float) -> float:
    """Window size where slow-start growth falls back from 2/ack to 1/ack.

    Opening by two segments per ack doubles the window every 2/3 of the
    acks a doubling normally takes, so the aggregate of N connections is
    emulated by keeping the fast rate until the window reaches
    3 ** (log N / (log 3 - log 2)), i.e. N windows' worth of doubling
    compressed into one connection.
    """
    if n_weight < 1.0:
        raise ValueError("n_weight must be >= 1")
    return 3.0 ** (math.log(n_weight) / (math.log(3.0) - math.log(2.0)))


@dataclass
class CongestionState:
    """Window state shared by all variants.

    cwnd is kept as a float accumulator; the usable window is its floor.
    ssthresh is integral (it is floored at every reduction).
    """

    n_weight: float = 1.0
    cwnd: float = 1.0
    ssthresh: int = 64
    phase: str = SLOW_START
    crossover: float = field(init=False)

    def __post_init__(self) -> None:
        self.crossover = slow_start_crossover(self.n_weight)
        refresh_phase(self)


def refresh_phase(state: CongestionState) -> None:
    """Outside recovery the phase is determined by cwnd vs ssthresh."""
    if state.phase != FAST_RECOVERY:
        state.phase = SLOW_START if state.cwnd < state.ssthresh else CONGESTION_AVOIDANCE


def on_ack_slow_start(state: CongestionState) -> None:
    """Slow-start growth: +2 per ack below the crossover, +1 above."""
    if state.cwnd <= state.crossover:
        state.cwnd += 2.0
    else:
        state.cwnd += 1.0
    refresh_phase(state)


def on_ack_congestion_avoidance(state: CongestionState) -> None:
    """Linear growth: N segments per round trip, spread over the acks."""
    state.cwnd += state.n_weight / state.cwnd


def on_congestion_signal(state: CongestionState) -> float:
    """Multiplicative decrease for one loss; returns the reduced cwnd.

    A loss taken while still in slow start halves the window (the probe
    overshot, so only one of the emulated connections' worth of caution
    is not enough); otherwise one of the N virtual connections backs
    off, scaling the window by (N - 1/2) / N.
    """
    if state.cwnd < state.ssthresh:
        reduced = state.cwnd / 2.0
    else:
        reduced = state.cwnd * (state.n_weight - 0.5) / state.n_weight
    state.ssthresh = max(2, int(reduced))
    state.cwnd = max(1.0, reduced)
    refresh_phase(state)
    return state.cwnd


def on_timeout(state: CongestionState) -> None:
    """Retransmission timeout: back off ssthresh, restart from one segment."""
    reduced = state.cwnd * (state.n_weight - 0.5) / state.n_weight
    state.ssthresh = max(2, int(reduced))
    state.cwnd = 1.0
    state.phase = SLOW_START


def window_allows_send(state: CongestionState, in_flight: int,
                       advertised: int) -> bool:
    """True if one more segment fits under both windows."""
    return in_flight < min(int(state.cwnd), advertised)


@dataclass(frozen=True)
class TraceRecord:
    """One line of a connection trace, as written to trace CSV files."""

    time_ns: int
    flow_id: int
    event: str          # data-sent | ack-received | loss-detected | timeout
    cwnd_before: float | None
    cwnd_after: float | None
    seq: int | None
    ack: int | None


class _IntervalSet:
    """Disjoint integer half-open intervals with O(log n) point updates.

    Used for received-but-not-yet-acked runs on the receiver and for the
    sack scoreboard on the sender; both only ever add points, query
    membership, and prune from the left.
    """

    __slots__ = ("starts", "ends", "total")

    def __init__(self) -> None:
        self.starts: list[int] = []
        self.ends: list[int] = []
        self.total = 0

    def __len__(self) -> int:
        return len(self.starts)

    def __contains__(self, x: int) -> bool:
        i = _bisect_right(self.starts, x)
        return i > 0 and x < self.ends[i - 1]

    def add(self, x: int) -> bool:
        """Insert one integer; returns False if it was already covered."""
        i = _bisect_right(self.starts, x)
        if i > 0 and x < self.ends[i - 1]:
            return False
        touches_prev = i > 0 and self.ends[i - 1] == x
        touches_next = i < len(self.starts) and self.starts[i] == x + 1
        if touches_prev and touches_next:
            self.ends[i - 1] = self.ends[i]
            del self.starts[i]
            del self.ends[i]
        elif touches_prev:
            self.ends[i - 1] = x + 1
        elif touches_next:
            self.starts[i] = x
        else:
            self.starts.insert(i, x)
            self.ends.insert(i, x + 1)
        self.total += 1
        return True

    def add_range(self, a: int, b: int) -> list[tuple[int, int]]:
        """Insert [a, b); returns the sub-ranges that were actually new."""
        if a >= b:
            return []
        i = _bisect_right(self.starts, a)
        if i > 0 and self.ends[i - 1] >= a:
            i -= 1      # overlaps or touches from the left
        j = i
        new_ranges: list[tuple[int, int]] = []
        cursor = a
        start_new, end_new = a, b
        while j < len(self.starts) and self.starts[j] <= b:
            s, e = self.starts[j], self.ends[j]
            if s > cursor:
                new_ranges.append((cursor, min(s, b)))
            cursor = max(cursor, e)
            start_new = min(start_new, s)
            end_new = max(end_new, e)
            j += 1
        if cursor < b:
            new_ranges.append((cursor, b))
        self.starts[i:j] = [start_new]
        self.ends[i:j] = [end_new]
        self.total += sum(e - s for s, e in new_ranges)
        return new_ranges

    def prune_below(self, cutoff: int) -> None:
        """Remove every value < cutoff."""
        while self.starts and self.ends[0] <= cutoff:
            self.total -= self.ends[0] - self.starts[0]
            del self.starts[0]
            del self.ends[0]
        if self.starts and self.starts[0] < cutoff:
            self.total -= cutoff - self.starts[0]
            self.starts[0] = cutoff

    def count_below(self, x: int) -> int:
        """How many covered values are < x."""
        i = _bisect_right(self.starts, x)
        total = 0
        for k in range(i):
            total += min(self.ends[k], x) - self.starts[k]
        return total

    def first_range(self) -> tuple[int, int] | None:
        if not self.starts:
            return None
        return self.starts[0], self.ends[0]

    def ranges(self) -> list[tuple[int, int]]:
        return list(zip(self.starts, self.ends))

    def range_containing(self, x: int) -> tuple[int, int] | None:
        i = _bisect_right(self.starts, x)
        if i > 0 and x < self.ends[i - 1]:
            return self.starts[i - 1], self.ends[i - 1]
        return None


def _bisect_right(a: list[int], x: int) -> int:
    lo, hi = 0, len(a)
    while lo < hi:
        mid = (lo + hi) // 2
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


class TcpReceiver:
    """Reassembly buffer: cumulative ack plus optional sack blocks."""

    def __init__(self, sack_enabled: bool = False) -> None:
        self.sack_enabled = sack_enabled
        self.cum_ack = 0                 # next expected segment
        self.pending = _IntervalSet()    # received above the cumulative point
        self.segments_received = 0       # unique segments (goodput)
        self.duplicates = 0

    def on_data(self, seq: int) -> tuple[int, list[tuple[int, int]]]:
        """Accept one segment, return (cumulative ack, sack blocks)."""
        if seq < self.cum_ack or seq in self.pending:
            self.duplicates += 1
        elif seq == self.cum_ack:
            self.segments_received += 1
            self.cum_ack += 1
            head = self.pending.first_range()
            if head is not None and head[0] == self.cum_ack:
                self.cum_ack = head[1]
                self.pending.prune_below(self.cum_ack)
        else:
            self.segments_received += 1
            self.pending.add(seq)

        blocks: list[tuple[int, int]] = []
        if self.sack_enabled and len(self.pending):
            # most recently changed block first, then the rest, max four
            recent = self.pending.range_containing(seq)
            if recent is not None:
                blocks.append(recent)
            for rng in reversed(self.pending.ranges()):
                if rng != recent and len(blocks) < 4:
                    blocks.append(rng)
        return self.cum_ack, blocks


class TcpSender:
    """Sliding-window sender: pumps segment numbers, reacts to acks and timers.

    The caller supplies clock readings in integer nanoseconds and turns
    the returned (seq, is_retransmit) pairs into packets.  The retransmit
    timer is exposed as `timer_deadline_ns`; the caller must invoke
    on_timer_check() at or after that time.
    """

    def __init__(self, variant: str, n_weight: float = 1.0, *,
                 flow_id: int = 0,
                 initial_ssthresh: int = 64,
                 advertised: int | None = None,
                 bulk_segments: int | None = None,
                 trace: list[TraceRecord] | None = None) -> None:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        self.flow_id = flow_id
        self.state = CongestionState(n_weight=n_weight, ssthresh=initial_ssthresh)
        self.advertised = advertised if advertised is not None else 1 << 30
        self.bulk_segments = bulk_segments
        self.trace = trace

        self.next_seq = 0            # next new segment to send
        self.cum_ack = 0             # everything below is delivered
        self.highest_sent = -1
        self.dupacks = 0
        self.in_recovery = False
        self.recovery_point = 0      # recovery ends when cum_ack reaches this
        # Rewinding next_seq puts already-delivered data back on the wire, and
        # its arrival produces duplicate acks at the catch-up point.  Dupack
        # triggers stay disarmed until cum_ack passes the frontier recorded at
        # the rewind, so those echoes cannot fire a bogus fast retransmit.
        self.guard_point = -1

        # sack scoreboard
        self.sacked = _IntervalSet()
        self.lost: set[int] = set()         # marked lost, not yet retransmitted
        # seq -> next_seq at retransmit time; once three segments past that
        # boundary are sacked, the retransmission itself is declared lost
        self.retx_marked: dict[int, int] = {}
        self._loss_scan_floor = 0

        # retransmission timer
        self.timer_deadline_ns: int | None = None
        self.rto_ns = RTO_INITIAL_NS
        self.srtt_ns: int | None = None
        self.rttvar_ns = 0
        self.backoff = 0
        self._timing_seq: int | None = None
        self._timing_sent_ns = 0

        self.active = False
        self.segments_sent = 0
        self.retransmits = 0
        self.timeouts = 0
        self.fast_retransmits = 0

    # -- window accounting ------------------------------------------------

    def in_flight(self) -> int:
        out = self.next_seq - self.cum_ack
        if self.variant == "sack":
            # Count only the transmission window: after a timeout rewind the
            # scoreboard may hold blocks at or above next_seq, and subtracting
            # those would underflow the estimate and mis-disarm the timer.
            out -= self.sacked.count_below(self.next_seq) + len(self.lost)
        return out

    def done(self) -> bool:
        return self.bulk_segments is not None and self.cum_ack >= self.bulk_segments

    # -- sending ----------------------------------------------------------

    def start(self, now_ns: int) -> list[tuple[int, bool]]:
        self.active = True
        return self.pump(now_ns)

    def pump(self, now_ns: int) -> list[tuple[int, bool]]:
        """Emit as many segments as the windows allow."""
        sends: list[tuple[int, bool]] = []
        if not self.active:
            return sends
        extra = 0
        if self.variant in ("reno", "newreno") and not self.in_recovery:
            extra = min(self.dupacks, 2)    # limited transmit
        while self.in_flight() < min(int(self.state.cwnd) + extra, self.advertised):
            if self.variant == "sack" and self.lost:
                seq = min(self.lost)
                self.lost.discard(seq)
                self.retx_marked[seq] = self.next_seq
                self._emit(sends, seq, True, now_ns)
                continue
            if self.bulk_segments is not None and self.next_seq >= self.bulk_segments:
                break
            seq = self.next_seq
            self.next_seq += 1
            if self.variant == "sack" and seq in self.sacked:
                continue    # receiver already holds it (post-timeout resend)
            is_retx = seq <= self.highest_sent
            if is_retx and self.variant == "sack":
                self.retx_marked[seq] = self.next_seq
            self._emit(sends, seq, is_retx, now_ns)
        return sends

    def _emit(self, sends: list[tuple[int, bool]], seq: int,
              is_retx: bool, now_ns: int) -> None:
        sends.append((seq, is_retx))
        self.segments_sent += 1
        if is_retx:
            self.retransmits += 1
            if seq == self._timing_seq:
                self._timing_seq = None     # Karn: never time a retransmission
        else:
            self.highest_sent = max(self.highest_sent, seq)
            if self._timing_seq is None:
                self._timing_seq = seq
                self._timing_sent_ns = now_ns
        if self.timer_deadline_ns is None:
            self.timer_deadline_ns = now_ns + self._effective_rto()
        self._record(now_ns, "data-sent", seq=seq)

    # -- ack processing ---------------------------------------------------

    def on_ack(self, ack: int, sack_blocks: list[tuple[int, int]],
               now_ns: int) -> list[tuple[int, bool]]:
        """Process one ack; returns segments to transmit right now."""
        sends: list[tuple[int, bool]] = []

        if self.variant == "sack":
            for a, b in sack_blocks:
                a = max(a, self.cum_ack)
                if a >= b:
                    continue
                for ga, gb in self.sacked.add_range(a, b):
                    for x in range(ga, gb):
                        self.lost.discard(x)

        if ack > self.cum_ack:
            self._on_advance(ack, now_ns, sends)
        elif ack == self.cum_ack and self.next_seq > self.cum_ack:
            self._on_duplicate(now_ns, sends)

        if self.variant == "sack":
            self.update_scoreboard()
            if (not self.in_recovery and not self.lost
                    and self.cum_ack < self.next_seq and self.sacked.total
                    and self.cum_ack not in self.retx_marked
                    and (self.next_seq - self.cum_ack
                         - self.sacked.count_below(self.next_seq)) == 1):
                # early retransmit: every outstanding segment except the head
                # hole is sacked, so no further dupacks are coming
                self.lost.add(self.cum_ack)
            if not self.in_recovery and self.lost:
                # scoreboard says data is missing even without three dupacks
                self._enter_recovery(now_ns, sends)

        sends.extend(self.pump(now_ns))
        if self.cum_ack >= self.next_seq:
            self.timer_deadline_ns = None   # nothing outstanding
        return sends

    def _on_advance(self, ack: int, now_ns: int, sends: list[tuple[int, bool]]) -> None:
        st = self.state
        newly = ack - self.cum_ack
        self.cum_ack = ack
        if self.next_seq < ack:
            self.next_seq = ack     # catch up after a timeout rewind
        if self.variant == "sack":
            self.sacked.prune_below(ack)
            for s in [s for s in self.lost if s < ack]:
                self.lost.discard(s)
            for s in [s for s in self.retx_marked if s < ack]:
                del self.retx_marked[s]
            if self._loss_scan_floor < ack:
                self._loss_scan_floor = ack

        self.backoff = 0
        if self._timing_seq is not None and ack > self._timing_seq:
            self._rtt_sample(now_ns - self._timing_sent_ns)
            self._timing_seq = None

        if self.in_recovery:
            if ack >= self.recovery_point:
                self._exit_recovery(now_ns, sends)
            elif self.variant == "newreno":
                # partial ack: the next hole is known lost, repair it now
                self._emit(sends, self.cum_ack, True, now_ns)
                st.cwnd = max(1.0, st.cwnd - newly + 1.0)
            elif self.variant == "reno":
                self._exit_recovery(now_ns, sends)
            # sack: stay in recovery, the scoreboard drives retransmissions
        else:
            self.dupacks = 0
            before = st.cwnd
            if st.cwnd < st.ssthresh:
                on_ack_slow_start(st)
            else:
                on_ack_congestion_avoidance(st)
            self._record(now_ns, "ack-received", before=before, ack=ack)

        if self.cum_ack < self.next_seq:
            self.timer_deadline_ns = now_ns + self._effective_rto()
        else:
            self.timer_deadline_ns = None

    def _on_duplicate(self, now_ns: int, sends: list[tuple[int, bool]]) -> None:
        st = self.state
        if self.in_recovery:
            if self.variant in ("reno", "newreno"):
                st.cwnd += 1.0      # window inflation: the dupack left the network
            return
        self.dupacks += 1
        if self.variant == "sack":
            return      # sack recovery is triggered by the scoreboard
        if self.dupacks == DUPACK_THRESHOLD and self.cum_ack > self.guard_point:
            self._enter_recovery(now_ns, sends)

    def _exit_recovery(self, now_ns: int, sends: list[tuple[int, bool]]) -> None:
        st = self.state
        self.in_recovery = False
        self.dupacks = 0
        self.retx_marked.clear()
        if self.variant in ("reno", "newreno"):
            st.cwnd = float(st.ssthresh)    # deflate
        st.phase = SLOW_START if st.cwnd < st.ssthresh else CONGESTION_AVOIDANCE
        if self.variant == "sack" and self.lost:
            # holes above the old recovery point belong to a new episode
            self._enter_recovery(now_ns, sends)

    def _enter_recovery(self, now_ns: int, sends: list[tuple[int, bool]]) -> None:
        st = self.state
        before = st.cwnd
        reduced = on_congestion_signal(st)
        self._record(now_ns, "loss-detected", before=before, after=reduced)
        self.fast_retransmits += 1
        # fresh timer for the repair; the stale deadline predates the episode
        self.timer_deadline_ns = now_ns + self._effective_rto()
        if self.cum_ack == self._timing_seq:
            self._timing_seq = None
        if self.variant == "tahoe":
            # slow-start resend of the whole window from the hole; wasteful
            # but repairs multi-loss windows without waiting for the timer
            st.cwnd = 1.0
            refresh_phase(st)
            self.guard_point = max(self.guard_point, self.next_seq)
            self.next_seq = self.cum_ack
            return
        self.in_recovery = True
        self.recovery_point = self.next_seq
        st.phase = FAST_RECOVERY
        if self.variant == "sack":
            if self.cum_ack not in self.sacked and self.cum_ack not in self.retx_marked:
                self.lost.add(self.cum_ack)
        else:
            st.cwnd = float(st.ssthresh) + DUPACK_THRESHOLD  # inflate for the three dupacks
            self._emit(sends, self.cum_ack, True, now_ns)

    def update_scoreboard(self) -> None:
        """Mark a hole lost once the highest sack sits three segments past it."""
        if not self.sacked.total:
            return
        # Never mark beyond next_seq: after a timeout rewind the region above
        # it is handled by the ordinary resend path, not by hole repair.
        threshold = min(self.sacked.ends[-1] - 3, self.next_seq)
        start = max(self.cum_ack, self._loss_scan_floor)
        for s in range(start, threshold):
            if s not in self.sacked and s not in self.retx_marked:
                self.lost.add(s)
        if threshold > self._loss_scan_floor:
            self._loss_scan_floor = threshold
        # A retransmission overtaken by three later sacks was lost as well.
        sacked_total = self.sacked.total
        for s, boundary in list(self.retx_marked.items()):
            if sacked_total - self.sacked.count_below(boundary) >= DUPACK_THRESHOLD:
                del self.retx_marked[s]
                if s not in self.sacked:
                    self.lost.add(s)

    # -- timer ------------------------------------------------------------

    def on_timer_check(self, now_ns: int) -> list[tuple[int, bool]]:
        """Fire the retransmission timeout if the deadline has passed."""
        if self.timer_deadline_ns is None or now_ns < self.timer_deadline_ns:
            return []
        st = self.state
        before = st.cwnd
        if self.backoff == 0:
            on_timeout(st)
        else:
            # repeated timeout for the same data: hold ssthresh steady
            st.cwnd = 1.0
            refresh_phase(st)
        self.timeouts += 1
        self._record(now_ns, "timeout", before=before, after=st.cwnd)
        self._timing_seq = None     # Karn
        self.dupacks = 0
        self.in_recovery = False
        self.guard_point = max(self.guard_point, self.next_seq)
        self.next_seq = self.cum_ack    # rewind; the resend path skips sacked data
        if self.variant == "sack":
            self.lost.clear()
            self.retx_marked.clear()
            self._loss_scan_floor = self.cum_ack
        self.backoff = min(self.backoff + 1, 6)
        sends = self.pump(now_ns)
        if sends or self.cum_ack < self.next_seq:
            self.timer_deadline_ns = now_ns + self._effective_rto()
        else:
            self.timer_deadline_ns = None
        return sends

    def _effective_rto(self) -> int:
        return min(RTO_MAX_NS, self.rto_ns << self.backoff)

    def _rtt_sample(self, sample_ns: int) -> None:
        if self.srtt_ns is None:
            self.srtt_ns = sample_ns
            self.rttvar_ns = sample_ns // 2
        else:
            err = sample_ns - self.srtt_ns
            self.srtt_ns += err >> 3
            self.rttvar_ns += (abs(err) - self.rttvar_ns) >> 2
        rto = self.srtt_ns + 4 * self.rttvar_ns
        # round up to the timer granularity
        rto = -(-rto // RTO_GRANULARITY_NS) * RTO_GRANULARITY_NS
        self.rto_ns = max(RTO_MIN_NS, min(RTO_MAX_NS, rto))

    # -- trace ------------------------------------------------------------

    def _record(self, now_ns: int, event: str, *, seq: int | None = None,
                ack: int | None = None, before: float | None = None,
                after: float | None = None) -> None:
        if self.trace is None:
            return
        cwnd = self.state.cwnd
        self.trace.append(TraceRecord(
            time_ns=now_ns, flow_id=self.flow_id, event=event,
            cwnd_before=cwnd if before is None else before,
            cwnd_after=cwnd if after is None else after,
            seq=seq, ack=ack))
