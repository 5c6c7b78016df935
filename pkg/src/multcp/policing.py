"""Estimating a connection's weight from its trace, and billing for it.

A connection that declares weight N pays N price units per unit time
while active.  Whether it actually behaves like weight N can be read
off a packet trace in two independent ways:

* steady state: every window reduction scales cwnd by (N - 1/2) / N,
  so each observed reduction ratio r inverts to N = 0.5 / (1 - r).
  The median over all reductions is robust against the occasional
  halving taken during slow start.
* slow start: the window opens by two segments per ack up to a
  crossover of 3 ** (log N / (log 3 - log 2)) and by one segment after,
  so the window value where the growth changes inverts to
  N = w ** ((log 3 - log 2) / log 3).

Simulation traces carry exact cwnd values; wire-only traces (cwnd
columns empty) fall back to coarse in-flight reconstruction from the
seq/ack columns, which is indicative rather than accurate.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass

from .tcp import TraceRecord

NS_PER_SEC = 1_000_000_000

TRACE_COLUMNS = ("time_ns", "flow_id", "event", "cwnd_before", "cwnd_after",
                 "seq", "ack")
DECLARATION_COLUMNS = ("flow_id", "declared_n", "start_ns", "end_ns")

# inverse of the slow-start crossover 3 ** (log N / (log 3 - log 2))
_SS_EXPONENT = (math.log(3.0) - math.log(2.0)) / math.log(3.0)


@dataclass(frozen=True)
class Declaration:
    """A flow's declared weight over a time interval."""

    flow_id: int
    declared_n: float
    start_ns: int
    end_ns: int

    def __post_init__(self) -> None:
        if self.declared_n < 1.0:
            raise ValueError("declared_n must be >= 1")
        if self.start_ns >= self.end_ns:
            raise ValueError("declaration interval must have start < end")


def estimate_n_from_decrease(ratio: float) -> float:
    """Invert a window-reduction ratio: cwnd scaling by (N - 1/2) / N.

    0.5 -> 1, 0.75 -> 2, 0.95 -> 10.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("decrease ratio must be in (0, 1)")
    return 0.5 / (1.0 - ratio)


def estimate_n_from_slow_start(window: float) -> float:
    """Invert the slow-start crossover window back to a weight."""
    if window < 1.0:
        raise ValueError("crossover window must be >= 1")
    return window ** _SS_EXPONENT


@dataclass(frozen=True)
class TraceAnalysis:
    headline_n: float | None
    method: str                 # "decrease" | "slow-start" | "indeterminate"
    decrease_n: float | None
    decrease_samples: int
    slow_start_n: float | None
    slow_start_samples: int

    @property
    def indeterminate(self) -> bool:
        return self.headline_n is None


def split_trace(records) -> dict[int, list[TraceRecord]]:
    """Group a mixed trace by flow, preserving per-flow time order."""
    out: dict[int, list[TraceRecord]] = {}
    for r in records:
        out.setdefault(r.flow_id, []).append(r)
    return out


def analyze_trace(records, *, min_decrease_samples: int = 5) -> TraceAnalysis:
    """Estimate the weight behind one flow's trace.

    The reduction-ratio median is the headline whenever at least
    `min_decrease_samples` loss events are available; otherwise the
    slow-start signature is used; with neither the verdict is
    indeterminate.  Timeouts never contribute ratios (they collapse the
    window to one segment, which says nothing about N).
    """
    records = list(records)
    flows = {r.flow_id for r in records}
    if len(flows) > 1:
        raise ValueError("trace mixes multiple flows; split it first")

    has_cwnd = any(r.cwnd_before is not None and r.cwnd_after is not None
                   for r in records)
    if has_cwnd or not records:
        ratios = _ratios_from_cwnd(records)
        windows = _crossovers_from_cwnd(records)
    else:
        ratios = _ratios_from_wire(records)
        windows = _crossovers_from_wire(records)

    decrease_n = None
    if ratios:
        decrease_n = statistics.median(estimate_n_from_decrease(r)
                                       for r in ratios)
    slow_start_n = None
    if windows:
        slow_start_n = statistics.median(estimate_n_from_slow_start(w)
                                         for w in windows)

    if decrease_n is not None and len(ratios) >= min_decrease_samples:
        headline, method = decrease_n, "decrease"
    elif slow_start_n is not None:
        headline, method = slow_start_n, "slow-start"
    elif decrease_n is not None:
        headline, method = decrease_n, "decrease"
    else:
        headline, method = None, "indeterminate"
    return TraceAnalysis(headline_n=headline, method=method,
                         decrease_n=decrease_n, decrease_samples=len(ratios),
                         slow_start_n=slow_start_n,
                         slow_start_samples=len(windows))


def _ratios_from_cwnd(records) -> list[float]:
    ratios = []
    for r in records:
        if r.event != "loss-detected":
            continue
        if r.cwnd_before is None or r.cwnd_after is None:
            continue
        if r.cwnd_before > 0 and 0.0 < r.cwnd_after / r.cwnd_before < 1.0:
            ratios.append(r.cwnd_after / r.cwnd_before)
    return ratios


def _crossovers_from_cwnd(records) -> list[float]:
    """Window values where ack growth falls from +2 to +1."""
    windows = []
    last_plus2: float | None = None
    for r in records:
        if r.event in ("loss-detected", "timeout"):
            last_plus2 = None
            continue
        if r.event != "ack-received" or r.cwnd_before is None:
            continue
        delta = (r.cwnd_after or 0.0) - r.cwnd_before
        if abs(delta - 2.0) < 1e-9:
            last_plus2 = r.cwnd_before
        elif abs(delta - 1.0) < 1e-9 and last_plus2 is not None:
            windows.append(last_plus2)
            last_plus2 = None
        else:
            last_plus2 = None   # congestion-avoidance growth ends the episode
    return windows


def _inflight_series(records) -> list[tuple[int, float]]:
    """Coarse in-flight estimate at each ack, from seq/ack columns only."""
    series = []
    highest = -1
    for i, r in enumerate(records):
        if r.event == "data-sent" and r.seq is not None:
            highest = max(highest, r.seq)
        elif r.event == "ack-received" and r.ack is not None and highest >= 0:
            series.append((i, float(highest + 1 - r.ack)))
    return series


def _ratios_from_wire(records, *, before_window: int = 10,
                      after_window: int = 30) -> list[float]:
    series = _inflight_series(records)
    if not series:
        return []
    positions = [i for i, r in enumerate(records) if r.event == "loss-detected"]
    indices = [i for i, _ in series]
    values = [v for _, v in series]
    ratios = []
    for pos in positions:
        k = _bisect(indices, pos)
        before = values[max(0, k - before_window):k]
        after = values[k:k + after_window]
        if not before or not after:
            continue
        peak, trough = max(before), min(after)
        if peak > 0 and 0.0 < trough / peak < 1.0:
            ratios.append(trough / peak)
    return ratios


def _crossovers_from_wire(records) -> list[float]:
    """Packets-per-ack dropping from 3 to 2 marks the slow-start crossover."""
    windows = []
    highest = -1
    sent_since_ack = 0
    prev_per_ack: int | None = None
    for r in records:
        if r.event == "data-sent" and r.seq is not None:
            highest = max(highest, r.seq)
            sent_since_ack += 1
        elif r.event == "ack-received":
            if prev_per_ack == 3 and sent_since_ack == 2 and r.ack is not None:
                windows.append(float(highest + 1 - r.ack))
            prev_per_ack = sent_since_ack
            sent_since_ack = 0
        elif r.event in ("loss-detected", "timeout"):
            prev_per_ack = None
            sent_since_ack = 0
    return windows


def _bisect(a: list[int], x: int) -> int:
    lo, hi = 0, len(a)
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ComplianceReport:
    status: str                 # "compliant" | "violation" | "unverifiable"
    declared_n: float
    observed_n: float | None
    method: str
    detail: str = ""


def verify_declaration(records, decl: Declaration,
                       tolerance: float = 0.1) -> ComplianceReport:
    """Check one declaration against the flow's trace.

    Only excess aggressiveness is a violation: observed N above
    declared * (1 + tolerance).  Using less than declared is the
    payer's loss, and a trace too thin to estimate from is
    "unverifiable", never a violation.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    window = [r for r in records
              if r.flow_id == decl.flow_id
              and decl.start_ns <= r.time_ns < decl.end_ns]
    analysis = analyze_trace(window)
    if analysis.headline_n is None:
        return ComplianceReport("unverifiable", decl.declared_n, None,
                                "indeterminate", "no usable evidence in window")
    observed = analysis.headline_n
    if observed > decl.declared_n * (1.0 + tolerance):
        return ComplianceReport("violation", decl.declared_n, observed,
                                analysis.method)
    return ComplianceReport("compliant", decl.declared_n, observed,
                            analysis.method)


def bill(declarations, period: tuple[int, int]) -> float:
    """Charge in weight-seconds: the time integral of the active sum of N.

    Computed piecewise-exactly, so it is additive over disjoint periods
    and invariant under any subdivision of the sampling intervals.
    Overlapping declarations for the same flow are rejected.
    """
    start_ns, end_ns = period
    if start_ns > end_ns:
        raise ValueError("billing period must have start <= end")
    by_flow: dict[int, list[Declaration]] = {}
    for d in declarations:
        by_flow.setdefault(d.flow_id, []).append(d)
    charge_ns = 0.0
    for flow_id, decls in by_flow.items():
        decls.sort(key=lambda d: d.start_ns)
        for prev, cur in zip(decls, decls[1:]):
            if cur.start_ns < prev.end_ns:
                raise ValueError(
                    f"overlapping declarations for flow {flow_id}")
        for d in decls:
            overlap = min(d.end_ns, end_ns) - max(d.start_ns, start_ns)
            if overlap > 0:
                charge_ns += d.declared_n * overlap
    return charge_ns / NS_PER_SEC


# -- file formats ----------------------------------------------------------

def write_trace_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow([
                r.time_ns, r.flow_id, r.event,
                "" if r.cwnd_before is None else repr(r.cwnd_before),
                "" if r.cwnd_after is None else repr(r.cwnd_after),
                "" if r.seq is None else r.seq,
                "" if r.ack is None else r.ack,
            ])


def read_trace_csv(path) -> list[TraceRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: expected trace header {TRACE_COLUMNS}")
        for row in reader:
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}: malformed row {row!r}")
            records.append(TraceRecord(
                time_ns=int(row[0]), flow_id=int(row[1]), event=row[2],
                cwnd_before=float(row[3]) if row[3] else None,
                cwnd_after=float(row[4]) if row[4] else None,
                seq=int(row[5]) if row[5] else None,
                ack=int(row[6]) if row[6] else None))
    return records


def write_declarations_csv(declarations, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DECLARATION_COLUMNS)
        for d in declarations:
            writer.writerow([d.flow_id, repr(float(d.declared_n)),
                             d.start_ns, d.end_ns])


def read_declarations_csv(path) -> list[Declaration]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != DECLARATION_COLUMNS:
            raise ValueError(
                f"{path}: expected declaration header {DECLARATION_COLUMNS}")
        for row in reader:
            if len(row) != len(DECLARATION_COLUMNS):
                raise ValueError(f"{path}: malformed row {row!r}")
            out.append(Declaration(flow_id=int(row[0]),
                                   declared_n=float(row[1]),
                                   start_ns=int(row[2]), end_ns=int(row[3])))
    return out
