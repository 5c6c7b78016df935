"""Estimate a flow's weight from its own trace, then bill it.

Runs one traced dumbbell where flow 0 claims weight 4, recovers the
weight from the multiplicative-decrease ratios in the trace, checks it
against an honest and a dishonest declaration, and prices the period.

Run:  python demos/police_a_flow.py
"""

from multcp.engine import ns_from_s
from multcp.harness import build_dumbbell, run_scenario
from multcp.policing import (Declaration, analyze_trace, bill, split_trace,
                             verify_declaration)

TRUE_N = 4.0


def main():
    weights = [TRUE_N] + [1.0] * 21
    scenario = build_dumbbell(22, variant="sack", weights=weights, seed=1,
                              trace=True)
    result = run_scenario(scenario)
    records = split_trace(result.trace)[0]
    analysis = analyze_trace(records)
    losses = sum(1 for r in records if r.event == "loss-detected")
    print(f"flow 0 ran with true N={TRUE_N:g}; trace has {losses} loss "
          f"events")
    print(f"estimated N = {analysis.headline_n:.2f} "
          f"(method: {analysis.method}, {analysis.decrease_samples} "
          f"decrease samples)")

    period = (0, ns_from_s(scenario.duration_s))
    for declared in (4.0, 2.0):
        decl = Declaration(flow_id=0, declared_n=declared,
                           start_ns=period[0], end_ns=period[1])
        report = verify_declaration(records, decl)
        print(f"declared N={declared:g}: {report.status}")
    honest = Declaration(0, TRUE_N, period[0], period[1])
    print(f"bill for the honest declaration: "
          f"{bill([honest], period):.1f} weight-seconds")


if __name__ == "__main__":
    main()
