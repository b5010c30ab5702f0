"""Max ratio ||eta * f|| / ||f|| as R moves from just above its threshold to far above it."""

import argparse
from pathlib import Path

from varspace import lab

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--kind", choices=["B", "F"], default="F")
    args = ap.parse_args()
    base = lab.ExperimentConfig.load(str(ROOT / "configs" / f"convolution_{args.kind.lower()}.json"))
    threshold = lab.convolution_R(base, args.kind)[1].get("c_log_1_over_q", 0.0) + base.n
    print(f"type {args.kind}, threshold {threshold:.4f}")
    for excess in (0.01, 0.05, 0.25, 1.0, 4.0, 16.0):
        raw = dict(base.raw)
        raw["convolution"] = {**raw["convolution"], "R": threshold + excess, "resolutions": [9]}
        raw["trials"] = args.trials
        rep = lab.run_convolution_experiment(lab.ExperimentConfig.from_dict(raw))
        s = rep.groups[0]["stats"]
        print(f"R = threshold + {excess:<6g} max {s['max']:.4f}  median {s['median']:.4f}")


if __name__ == "__main__":
    main()
