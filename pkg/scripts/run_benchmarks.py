#!/usr/bin/env python3
"""Run a benchmark campaign and write report.csv/report.json/plotdata.

Thin wrapper over the `meshcal run` command so the presets are one
invocation away:

    python3 scripts/run_benchmarks.py --preset desk --output-dir results
    python3 scripts/run_benchmarks.py --preset paper --threads 0

The "desk" preset finishes in minutes; "paper" reproduces the full noise
sweep (100 trials, 1000 fidelity samples) and the N = K timing sweep.
"""

import sys

from meshcal.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", *sys.argv[1:]]))
