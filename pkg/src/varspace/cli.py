"""Command-line entry point: ``varspace <command> --config FILE``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import lab
from .errors import ConfigError, VarspaceError

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varspace", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "norm": "evaluate one Luxemburg, Besov or Triebel-Lizorkin norm",
        "audit-weights": "check a weight sequence for admissibility",
        "audit-domain": "MR/IR/ER audit of a raster domain",
        "verify-qe": "cube vs subset sequence-norm equivalence",
        "verify-synthesis": "atomic synthesis upper bound",
        "verify-conv": "eta-kernel convolution inequalities",
        "synthesize": "sum a coefficient sequence of reference atoms",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--trials", type=int, default=None, help="override the trial count")
        sp.add_argument("--out", default=None, help="write the JSON report here (default: stdout)")
        if name.startswith("verify"):
            sp.add_argument("--csv", default=None, help="write per-trial ratios as CSV")
        if name == "synthesize":
            sp.add_argument("--values", default=None, help="save the synthesized samples (.npy)")
    return ap


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = lab.ExperimentConfig.load(args.config).override(seed=args.seed, trials=args.trials,
                                                              experiment=args.command)
        if args.command.startswith("verify"):
            runner = {"verify-qe": lab.run_qe_experiment, "verify-synthesis": lab.run_synthesis_experiment,
                      "verify-conv": lab.run_convolution_experiment}[args.command]
            report = runner(cfg)
            _emit(report.to_json(), args.out)
            if args.csv:
                Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
            return EXIT_OK if report.verdict else EXIT_FAIL
        if args.command == "synthesize":
            rep, f = lab.run_synthesize(cfg)
            if args.values:
                np.save(args.values, f.values)
            result = rep
        elif args.command == "norm":
            result = lab.run_norm(cfg)
        elif args.command == "audit-weights":
            result = lab.weight_audit_report(cfg)
        else:
            result = lab.run_domain_audit(cfg)
        _emit(lab.canonical_json(result), args.out)
        return EXIT_OK if result["verdict"] else EXIT_FAIL
    except (ConfigError, VarspaceError, json.JSONDecodeError, OSError) as exc:
        print(f"varspace: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
