"""Fairness definitions and reference allocators on capacitated networks.

A Network is a set of capacitated links plus one fixed route (a set of
links) per connection.  Two fairness notions are covered:

* max-min: no connection's rate can be raised without lowering that of
  a connection with an already smaller-or-equal rate.  Checked either
  definitionally against a grid of alternative feasible vectors (small
  instances) or via the bottleneck criterion: every connection must
  cross a saturated link on which it is among the fastest.
* (weighted) proportional fairness: for every feasible alternative y,
  sum_s w_s (y_s - x_s) / x_s <= 0.  Checked by randomized search over
  feasible alternatives.

The strict variant of the max-min test demands a strictly smaller
victim (x_s < x_r instead of x_s <= x_r).  Equal-rate allocations can
fail the strict reading while being max-min fair under the standard
one, so verdicts report both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

_EPS = 1e-9


@dataclass(frozen=True)
class Network:
    """Link capacities plus one route (tuple of link names) per connection."""

    capacities: dict[str, float]
    routes: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        for name, cap in self.capacities.items():
            if cap <= 0:
                raise ValueError(f"link {name!r} must have positive capacity")
        for i, route in enumerate(self.routes):
            if not route:
                raise ValueError(f"connection {i} has an empty route")
            for name in route:
                if name not in self.capacities:
                    raise ValueError(f"connection {i} uses unknown link {name!r}")

    @property
    def n_connections(self) -> int:
        return len(self.routes)

    def users(self, link: str) -> list[int]:
        return [i for i, r in enumerate(self.routes) if link in r]

    def loads(self, rates) -> dict[str, float]:
        out = dict.fromkeys(self.capacities, 0.0)
        for i, route in enumerate(self.routes):
            for name in route:
                out[name] += rates[i]
        return out

    def route_cap(self, conn: int) -> float:
        return min(self.capacities[name] for name in self.routes[conn])

    def is_feasible(self, rates, tol: float = _EPS) -> bool:
        if len(rates) != self.n_connections:
            raise ValueError("rate vector length mismatch")
        if any(r < -tol for r in rates):
            return False
        loads = self.loads(rates)
        return all(loads[name] <= cap * (1.0 + tol) + tol
                   for name, cap in self.capacities.items())


# -- max-min ---------------------------------------------------------------

@dataclass(frozen=True)
class MaxminVerdict:
    passed: bool            # standard form: victim with x_s <= x_r
    passed_strict: bool | None  # strict form: victim with x_s < x_r
    method: str             # "brute-force" or "bottleneck"
    witness: tuple | None   # (alternative y, beneficiary r) refuting the claim
    detail: str = ""


def maxmin_allocate(network: Network) -> list[float]:
    """Progressive filling: raise all rates together, freeze at bottlenecks."""
    n = network.n_connections
    rates = [0.0] * n
    remaining = dict(network.capacities)
    active = set(range(n))
    while active:
        counts = dict.fromkeys(network.capacities, 0)
        for i in active:
            for name in network.routes[i]:
                counts[name] += 1
        step = min(remaining[name] / counts[name]
                   for name in network.capacities if counts[name] > 0)
        for i in active:
            rates[i] += step
        for name in network.capacities:
            remaining[name] -= step * counts[name]
        saturated = {name for name, rem in remaining.items()
                     if counts[name] > 0 and rem <= _EPS * network.capacities[name]}
        frozen = {i for i in active
                  if any(name in saturated for name in network.routes[i])}
        if not frozen:      # numerical corner: freeze everyone touching the minimum
            break
        active -= frozen
    return rates


def check_maxmin(network: Network, rates, *, grid_points: int = 11,
                 brute_force_limit: tuple[int, int] = (4, 3)) -> MaxminVerdict:
    """Is `rates` max-min fair on `network`?

    Small instances are checked against the definition over a grid of
    alternative feasible vectors; larger instances fall back to the
    bottleneck criterion (equivalent for feasible allocations).
    """
    rates = [float(r) for r in rates]
    if not network.is_feasible(rates):
        return MaxminVerdict(False, False, "feasibility", None,
                             "rate vector is not feasible")
    n = network.n_connections
    max_conns, max_links = brute_force_limit
    if n <= max_conns and len(network.capacities) <= max_links:
        return _check_maxmin_brute(network, rates, grid_points)
    passed = _check_maxmin_bottleneck(network, rates)
    return MaxminVerdict(passed, None, "bottleneck", None,
                         "instance too large for definitional search")


def _check_maxmin_brute(network: Network, rates, grid_points) -> MaxminVerdict:
    n = network.n_connections
    scale = max(max(network.capacities.values()), 1.0)
    eps = _EPS * scale
    axes = [np.linspace(0.0, network.route_cap(i), grid_points) for i in range(n)]
    passed = True
    passed_strict = True
    witness = None
    witness_strict = None
    for y in itertools.product(*axes):
        if not network.is_feasible(y):
            continue
        for r in range(n):
            if y[r] <= rates[r] + eps:
                continue
            # someone with a smaller-or-equal rate must pay for the raise
            pays = any(y[s] < rates[s] - eps and rates[s] <= rates[r] + eps
                       for s in range(n))
            pays_strict = any(y[s] < rates[s] - eps and rates[s] < rates[r] - eps
                              for s in range(n))
            if not pays and passed:
                passed = False
                witness = (tuple(y), r)
            if not pays_strict and passed_strict:
                passed_strict = False
                witness_strict = (tuple(y), r)
    detail = ""
    if passed and not passed_strict:
        detail = ("fails only the strict reading (no strictly smaller victim); "
                  "typical for equal-rate allocations")
    return MaxminVerdict(passed, passed_strict, "brute-force",
                         witness if witness is not None else witness_strict, detail)


def _check_maxmin_bottleneck(network: Network, rates) -> bool:
    loads = network.loads(rates)
    for i in range(network.n_connections):
        has_bottleneck = False
        for name in network.routes[i]:
            cap = network.capacities[name]
            saturated = loads[name] >= cap * (1.0 - _EPS) - _EPS
            fastest = all(rates[i] >= rates[j] - _EPS for j in network.users(name))
            if saturated and fastest:
                has_bottleneck = True
                break
        if not has_bottleneck:
            return False
    return True


# -- proportional fairness -------------------------------------------------

@dataclass(frozen=True)
class PfVerdict:
    passed: bool
    worst_sum: float        # max of sum_s w_s (y_s - x_s) / x_s over samples
    worst_y: tuple | None
    samples: int
    detail: str = ""


def check_weighted_pf(network: Network, rates, weights, *,
                      samples: int = 10_000, seed: int = 0,
                      tol: float = 1e-7) -> PfVerdict:
    """Randomized test of sum_s w_s (y_s - x_s) / x_s <= 0 over feasible y.

    Alternatives are drawn uniformly in the per-connection capacity box
    and projected onto the feasible region by scaling; boundary points
    are the discriminating ones, interior draws are kept as well.
    """
    x = np.asarray(rates, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = network.n_connections
    if x.shape != (n,) or w.shape != (n,):
        raise ValueError("rates and weights must have one entry per connection")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if not network.is_feasible(x):
        return PfVerdict(False, math.inf, None, 0, "rate vector is not feasible")
    if np.any((x <= 0) & (w > 0)):
        return PfVerdict(False, math.inf, None, 0,
                         "a weighted connection has zero rate")

    link_names = sorted(network.capacities)
    caps = np.array([network.capacities[name] for name in link_names])
    incidence = np.zeros((len(link_names), n))
    for l, name in enumerate(link_names):
        for i in network.users(name):
            incidence[l, i] = 1.0
    box = np.array([network.route_cap(i) for i in range(n)])

    rng = np.random.default_rng(seed)
    y = rng.uniform(0.0, 1.0, size=(samples, n)) * box
    loads = y @ incidence.T
    factors = np.max(loads / caps, axis=1)
    np.maximum(factors, 1.0, out=factors)
    y /= factors[:, None]

    active = w > 0
    terms = (y[:, active] - x[active]) / x[active] * w[active]
    sums = terms.sum(axis=1)
    worst = int(np.argmax(sums))
    worst_sum = float(sums[worst])
    return PfVerdict(worst_sum <= tol, worst_sum, tuple(y[worst]), samples)


def check_pf(network: Network, rates, **kwargs) -> PfVerdict:
    """Unweighted proportional fairness."""
    return check_weighted_pf(network, rates, [1.0] * network.n_connections,
                             **kwargs)


# -- weighted proportionally fair allocation -------------------------------

@dataclass(frozen=True)
class WpfAllocation:
    rates: list[float]
    converged: bool
    kkt_residual: float
    method: str             # "closed-form" or "dual-descent"
    detail: str = ""


def wpf_allocate(network: Network, weights) -> WpfAllocation:
    """Rates maximising sum_s w_s log x_s subject to link capacities.

    With a single shared link the optimum is the weight-proportional
    split C w_s / sum w.  In general the capacity-constrained optimum is
    found through the dual: each link gets a price lambda_l, each
    connection a rate w_s / (sum of prices on its route), and the prices
    minimise the smooth dual function; the KKT residual reported is the
    worst complementary-slackness and feasibility violation, normalised
    by capacity.
    """
    w = np.asarray(weights, dtype=float)
    n = network.n_connections
    if w.shape != (n,):
        raise ValueError("weights must have one entry per connection")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if not np.any(w > 0):
        raise ValueError("at least one weight must be positive")

    link_names = sorted(network.capacities)
    caps = np.array([network.capacities[name] for name in link_names])

    active = np.flatnonzero(w > 0)
    sub_routes = [network.routes[i] for i in active]
    w_act = w[active]

    used = sorted({name for route in sub_routes for name in route})
    if len(used) == 1:
        cap = network.capacities[used[0]]
        rates = np.zeros(n)
        rates[active] = cap * w_act / w_act.sum()
        return WpfAllocation(list(rates), True, 0.0, "closed-form")

    incidence = np.zeros((len(link_names), len(active)))
    for l, name in enumerate(link_names):
        for k, route in enumerate(sub_routes):
            if name in route:
                incidence[l, k] = 1.0

    def dual(lam):
        q = incidence.T @ lam
        return float(np.sum(w_act * (np.log(w_act / q) - 1.0)) + lam @ caps)

    def grad(lam):
        q = incidence.T @ lam
        return caps - incidence @ (w_act / q)

    lam0 = np.maximum(incidence @ w_act, 1e-6) / caps
    res = minimize(dual, lam0, jac=grad, method="L-BFGS-B",
                   bounds=[(1e-12, None)] * len(caps),
                   options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-12})
    lam = res.x
    q = incidence.T @ lam
    rates = np.zeros(n)
    rates[active] = w_act / q

    loads = incidence @ rates[active]
    overload = float(np.max(np.maximum(loads - caps, 0.0) / caps))
    # complementary slackness, made dimensionless by the total weight
    slack = float(np.max(lam * np.abs(caps - loads)) / w_act.sum())
    residual = max(overload, slack)
    converged = bool(res.success) and residual <= 1e-6
    detail = "" if converged else f"optimizer: {res.message}"
    return WpfAllocation(list(rates), converged, residual, "dual-descent", detail)
