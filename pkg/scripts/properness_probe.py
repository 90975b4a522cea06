"""Capped-box integrals of the unnormalized posterior for tiny exact samples."""
import argparse
import math

from cohrel.observe import ComponentDataset
from cohrel.weibull import PriorSpec, log_properness_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--caps", default="10,100,1000")
    ap.add_argument("--b", default="0,1")
    args = ap.parse_args()
    caps = [float(c) for c in args.caps.split(",")]
    samples = {"n=1": [2.0], "n=2": [1.0, 2.0], "n=3": [1.0, 2.0, 3.0]}
    for b in (float(v) for v in args.b.split(",")):
        for name, x in samples.items():
            vals = [log_properness_probe(ComponentDataset(1, x, x), PriorSpec(b), c)[0] for c in caps]
            steps = " ".join(f"{math.exp(v2 - v1):8.4f}" for v1, v2 in zip(vals, vals[1:]))
            print(f"b={b:g} {name}: log I = " + " ".join(f"{v:9.4f}" for v in vals)
                  + f"   successive ratios {steps}")


if __name__ == "__main__":
    main()
