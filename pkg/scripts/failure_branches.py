"""Entanglement left in rejected protocol runs on |++> clients.

Lists every failure record with its probability and concurrence, then the
concurrence of the record-averaged failure state.
"""
import argparse

from heraldsim.metrics import PLUS_PLUS, concurrence
from heraldsim.photonics import NodeParams, simulate_resource
from heraldsim.ppp import run_ppp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-abs", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.0)
    args = ap.parse_args()
    node = NodeParams(args.p_abs, args.p_abs, args.delta)
    result = run_ppp(PLUS_PLUS, simulate_resource(node))

    print(f"{'m':>8} {'n':>8} {'probability':>14} {'concurrence':>12}")
    for b in result.failures:
        print(f"{str(b.m):>8} {str(b.n):>8} {b.probability:14.6e} {concurrence(b.state):12.6f}")
    print(f"\np_failure {result.p_failure:.6f}")
    print(f"averaged failure state concurrence {concurrence(result.failure_state()):.3e}")


if __name__ == "__main__":
    main()
