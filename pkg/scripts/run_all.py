"""Run every shipped config through the CLI and collect the reports.

    python3 scripts/run_all.py [--out results] [--trials N]

Exit status is 2 if any run hit a config or data error. Failed verdicts
(exit 1) are listed but expected for the negative examples (slit domain,
factorial weight).
"""

import argparse
import json
import sys
import time
from pathlib import Path

from varspace import cli

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--trials", type=int, default=None, help="override the trial count of verify-* runs")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    errors = 0
    for path in sorted((ROOT / "configs").glob("*.json")):
        command = json.loads(path.read_text())["experiment"]
        argv = [command, "--config", str(path), "--out", str(out / f"{path.stem}.json")]
        if command.startswith("verify"):
            argv += ["--csv", str(out / f"{path.stem}.csv")]
            if args.trials:
                argv += ["--trials", str(args.trials)]
        t0 = time.perf_counter()
        code = cli.main(argv)
        print(f"{path.stem:22s} {command:17s} exit={code} {time.perf_counter() - t0:7.1f}s")
        errors += code == 2
    return 2 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
