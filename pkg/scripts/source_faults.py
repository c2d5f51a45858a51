"""Table of post-selection fidelity and concurrence for a faulty photon source."""
import argparse

import numpy as np

from heraldsim.metrics import source_fault_analysis
from heraldsim.photonics import NodeParams, SourceModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-abs", type=float, default=0.1)
    ap.add_argument("--distinguishable", action="store_true",
                    help="split photon pairs binomially instead of bunching them")
    args = ap.parse_args()
    node = NodeParams.symmetric(args.p_abs)
    ind = not args.distinguishable

    print(f"{'p0':>6} {'p2':>8} {'fidelity':>10} {'concurrence':>12} {'p_success':>12}")
    for p0 in (0.0, 0.14, 0.3, 0.5):
        for p2 in np.linspace(0, 0.05, 6):
            f = source_fault_analysis(node, SourceModel.faulty(p0, p2, ind))
            print(f"{p0:6.2f} {p2:8.4f} {f.fidelity:10.6f} {f.concurrence:12.6f} {f.p_success:12.4e}")

    f = source_fault_analysis(node, SourceModel.faulty(0.14, 0.0008, ind))
    print(f"\nreference point p0=0.14 p2=0.0008: fidelity {f.fidelity:.5f}, "
          f"concurrence {f.concurrence:.5f}")


if __name__ == "__main__":
    main()
