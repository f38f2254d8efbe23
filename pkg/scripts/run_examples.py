#!/usr/bin/env python3
"""Run the reference workflows on the bundled problem files.

Writes one JSON report per (problem, command) into --out and prints the
one-line summaries.  Exit status is nonzero if any run ends with an
unexpected code.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from fixedpass.cli import Flags, parse_problem, run, summary

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"

# (file, command, expected exit code)
WORKFLOWS = [
    ("example1.json", "stability", 0),
    ("example1.json", "feasibility", 0),
    ("example1.json", "max-ifp", 0),
    ("example2.json", "feasibility", 0),
    ("example2.json", "max-ifp", 0),
    ("example2.json", "max-ofp", 0),
    ("example2.json", "stability", 2),
    ("example1_widened.json", "stability", 2),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="reports", help="directory for the JSON reports")
    ap.add_argument("--grid", type=int, help="also run the grid oracle at this resolution")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bad = 0
    for fname, command, expected in WORKFLOWS:
        spec = parse_problem(PROBLEMS / fname)
        t0 = time.perf_counter()
        report, code = run(command, spec, Flags(grid=args.grid))
        dt = time.perf_counter() - t0
        path = out / f"{Path(fname).stem}.{command}.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        flag = "" if code == expected else f"  <-- expected exit {expected}"
        bad += code != expected
        print(f"== {fname} {command}: exit {code} in {dt:.2f}s{flag}")
        print(summary(report))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
