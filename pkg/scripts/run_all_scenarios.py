#!/usr/bin/env python3
"""Run every shipped scenario and drop the artifacts in ./out.

Equivalent to `condpoint run scenarios/*.json --outdir out`; kept as a
script so a fresh checkout has a one-command smoke run.
"""

import sys
from pathlib import Path

from condpoint import cli

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out"
    scenarios = sorted((ROOT / "scenarios").glob("*.json"))
    summary = cli.run_paths(scenarios, outdir)
    for entry in summary["scenarios"]:
        status = "ok " if entry["ok"] else "FAIL"
        print(f"[{status}] {entry['name']}: {', '.join(entry['artifacts']) or entry.get('error')}")
    print(f"artifacts in {outdir}")
    return 0 if summary["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
