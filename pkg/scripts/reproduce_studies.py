#!/usr/bin/env python3
"""Run every preset end to end and summarize the outcomes.

Writes one artifact directory per preset under --out (default results/) and
prints a table row per run: safety minimum, terminal state norm, envelope
ratio, and whether any monitor fired.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from safeadp.cli import main as cli_main
from safeadp.presets import PRESET_NAMES


def run_all(out_root: Path) -> int:
    failures = 0
    print(f"{'preset':14s} {'exit':4s} {'wall':>6s} {'min_h':>9s} "
          f"{'|x(T)|':>9s} {'env_ratio':>9s}  monitors")
    for name in PRESET_NAMES:
        out = out_root / name
        t0 = time.time()
        code = cli_main(["run", "--preset", name, "--out", str(out)])
        wall = time.time() - t0
        summary_path = out / "summary.json"
        if summary_path.exists():
            s = json.loads(summary_path.read_text())
            min_h = s["min_h"]
            term = float(np.linalg.norm(s["terminal_x"]))
            ratio = s["max_err_envelope_ratio"]
            fired = ",".join(e["monitor"] for e in s["monitor_events"]) or "-"
        else:
            min_h, term, ratio, fired = float("nan"), float("nan"), float("nan"), "?"
        print(f"{name:14s} {code:4d} {wall:5.1f}s {min_h:9.4f} {term:9.2e} "
              f"{ratio:9.3f}  {fired}")
        failures += int(code not in (0,))
    return failures


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="artifact root")
    args = parser.parse_args()
    sys.exit(run_all(Path(args.out)))
