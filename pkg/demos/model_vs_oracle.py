"""Analytic throughput against the stochastic saw-tooth oracle.

Prints one row per (N, p) cell: the closed-form prediction, the oracle
average over simulated loss cycles, and the relative gap.  The gap
shrinks with more cycles; at ten thousand it sits well inside 10%.

Run:  python demos/model_vs_oracle.py
"""

from multcp.model import gain_ratio, multcp_throughput, sawtooth_oracle

PACKET = 1000.0     # bytes
RTT = 0.1           # seconds


def main():
    print(f"{'N':>4} {'p':>8} {'formula B/s':>14} {'oracle B/s':>14} "
          f"{'gap':>7}")
    for n in (1.0, 2.0, 4.0, 8.0):
        for p in (1e-4, 1e-3):
            formula = multcp_throughput(n, p, PACKET, RTT)
            oracle = sawtooth_oracle(n, p, PACKET, RTT, cycles=10_000)
            gap = abs(oracle.throughput_Bps - formula) / formula
            print(f"{n:4g} {p:8.0e} {formula:14.0f} "
                  f"{oracle.throughput_Bps:14.0f} {gap:6.1%}")
    print()
    print("gain over a single standard connection (same p, B, R):")
    for n in (1.0, 2.0, 4.0, 8.0, 10.0):
        print(f"  N={n:4g}  ratio {gain_ratio(n):5.2f}  "
              f"(ideal {n:g}, deviation {abs(gain_ratio(n) - n) / n:.1%})")


if __name__ == "__main__":
    main()
