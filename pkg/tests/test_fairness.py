"""Max-min and proportional fairness: allocators and checkers."""

import numpy as np
import pytest

from multcp.fairness import (Network, check_maxmin, check_pf,
                             check_weighted_pf, maxmin_allocate, wpf_allocate)

TRIANGLE = Network(
    capacities={"ab": 10.0, "bc": 10.0},
    routes=(("ab", "bc"), ("ab",), ("bc",)),
)


def test_network_validation():
    with pytest.raises(ValueError):
        Network(capacities={"l": 0.0}, routes=(("l",),))
    with pytest.raises(ValueError):
        Network(capacities={"l": 1.0}, routes=((),))
    with pytest.raises(ValueError):
        Network(capacities={"l": 1.0}, routes=(("m",),))


def test_network_queries():
    assert TRIANGLE.n_connections == 3
    assert TRIANGLE.users("ab") == [0, 1]
    assert TRIANGLE.route_cap(0) == 10.0
    assert TRIANGLE.loads([1, 2, 3]) == {"ab": 3.0, "bc": 4.0}
    assert TRIANGLE.is_feasible([5, 5, 5])
    assert not TRIANGLE.is_feasible([6, 5, 5])
    assert not TRIANGLE.is_feasible([-1, 0, 0])


def test_maxmin_single_link_splits_equally():
    net = Network(capacities={"l": 12.0}, routes=(("l",),) * 3)
    assert maxmin_allocate(net) == pytest.approx([4.0, 4.0, 4.0])


def test_maxmin_two_link_classic():
    # the long connection shares both links; 5 each, then the short
    # ones top up to the remaining capacity
    rates = maxmin_allocate(TRIANGLE)
    assert rates == pytest.approx([5.0, 5.0, 5.0])


def test_maxmin_uneven_capacities():
    net = Network(capacities={"thin": 2.0, "fat": 9.0},
                  routes=(("thin", "fat"), ("fat",)))
    rates = maxmin_allocate(net)
    # thin caps the long connection at 2; the rest of fat goes to conn 1
    assert rates == pytest.approx([2.0, 7.0])


def test_check_maxmin_accepts_the_allocator():
    for net in (TRIANGLE,
                Network(capacities={"l": 7.0}, routes=(("l",),) * 4)):
        verdict = check_maxmin(net, maxmin_allocate(net))
        assert verdict.passed
        assert verdict.method == "brute-force"


def test_check_maxmin_rejects_skewed_vector():
    verdict = check_maxmin(TRIANGLE, [1.0, 9.0, 9.0])
    assert not verdict.passed
    assert verdict.witness is not None


def test_check_maxmin_strict_reading_differs_on_equal_rates():
    net = Network(capacities={"l": 10.0}, routes=(("l",),) * 2)
    verdict = check_maxmin(net, [5.0, 5.0])
    assert verdict.passed
    assert verdict.passed_strict is False
    assert "strict" in verdict.detail


def test_check_maxmin_infeasible_fails_fast():
    verdict = check_maxmin(TRIANGLE, [20.0, 0.0, 0.0])
    assert not verdict.passed
    assert verdict.method == "feasibility"


def test_check_maxmin_large_instance_uses_bottleneck_rule():
    net = Network(capacities={f"l{i}": 10.0 for i in range(5)},
                  routes=tuple((f"l{i}",) for i in range(5)))
    verdict = check_maxmin(net, [10.0] * 5)
    assert verdict.passed
    assert verdict.method == "bottleneck"
    assert verdict.passed_strict is None


def test_wpf_single_link_closed_form():
    net = Network(capacities={"l": 30.0}, routes=(("l",),) * 3)
    alloc = wpf_allocate(net, [1.0, 2.0, 3.0])
    assert alloc.method == "closed-form"
    assert alloc.converged
    assert alloc.rates == pytest.approx([5.0, 10.0, 15.0])


def test_wpf_zero_weight_gets_nothing():
    net = Network(capacities={"l": 10.0}, routes=(("l",),) * 2)
    alloc = wpf_allocate(net, [0.0, 4.0])
    assert alloc.rates == pytest.approx([0.0, 10.0])


def test_wpf_multi_link_known_optimum():
    # one long flow against two locals, equal weights: x0 = C/3, locals 2C/3
    alloc = wpf_allocate(TRIANGLE, [1.0, 1.0, 1.0])
    assert alloc.method == "dual-descent"
    assert alloc.converged
    assert alloc.kkt_residual <= 1e-6
    assert alloc.rates == pytest.approx([10 / 3, 20 / 3, 20 / 3], rel=1e-3)


def test_wpf_output_passes_pf_check():
    alloc = wpf_allocate(TRIANGLE, [2.0, 1.0, 1.0])
    verdict = check_weighted_pf(TRIANGLE, alloc.rates, [2.0, 1.0, 1.0],
                                samples=4000, seed=11, tol=1e-5)
    assert verdict.passed, verdict


def test_pf_check_rejects_maxmin_on_asymmetric_net():
    # equal split is not proportionally fair when routes differ in length
    rates = maxmin_allocate(TRIANGLE)
    verdict = check_pf(TRIANGLE, rates, samples=4000, seed=2)
    assert not verdict.passed
    assert verdict.worst_sum > 0


def test_pf_check_flags_infeasible_and_starved():
    assert not check_weighted_pf(TRIANGLE, [9, 9, 9], [1, 1, 1]).passed
    out = check_weighted_pf(TRIANGLE, [0.0, 5.0, 5.0], [1, 1, 1])
    assert not out.passed and "zero rate" in out.detail


def test_wpf_rejects_bad_weights():
    with pytest.raises(ValueError):
        wpf_allocate(TRIANGLE, [1.0, 1.0])
    with pytest.raises(ValueError):
        wpf_allocate(TRIANGLE, [-1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        wpf_allocate(TRIANGLE, [0.0, 0.0, 0.0])


def test_wpf_price_interpretation_two_users():
    # doubling the weight doubles the share on a shared link
    net = Network(capacities={"l": 9.0}, routes=(("l",), ("l",)))
    alloc = wpf_allocate(net, [2.0, 1.0])
    assert alloc.rates[0] / alloc.rates[1] == pytest.approx(2.0, rel=1e-9)


def test_random_instances_satisfy_kkt():
    rng = np.random.default_rng(0)
    for _ in range(10):
        caps = {f"l{i}": float(rng.uniform(1, 20)) for i in range(3)}
        routes = []
        for _ in range(4):
            k = rng.integers(1, 4)
            routes.append(tuple(rng.choice(sorted(caps), size=k, replace=False)))
        net = Network(capacities=caps, routes=tuple(routes))
        w = rng.uniform(0.5, 4.0, size=4)
        alloc = wpf_allocate(net, w)
        assert alloc.kkt_residual <= 1e-5
        assert net.is_feasible(alloc.rates, tol=1e-6)
