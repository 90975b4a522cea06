"""Simulated censoring percentages per component next to the reference values."""
import argparse

from cohrel.bench import REFERENCE_CENSORING, SCENARIOS, censoring_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--units", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'scen':>4} {'comp':>4} {'left':>7} {'ref':>6} {'right':>7} {'ref':>6} {'total':>7}")
    for sid, scen in SCENARIOS.items():
        for row, (left, right) in zip(censoring_summary(scen, args.units, args.seed),
                                      REFERENCE_CENSORING[sid]):
            print(f"{sid:>4} {row.component:>4} {row.left:7.2f} {left:6.1f} "
                  f"{row.right:7.2f} {right:6.1f} {row.total:7.2f}")


if __name__ == "__main__":
    main()
