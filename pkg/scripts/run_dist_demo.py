#!/usr/bin/env python3
"""Run the shipped CDF-overlay demo (analytic laws vs simulation)."""
import sys
from pathlib import Path

from tcadet.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "dist_demo.yaml"

if __name__ == "__main__":
    raise SystemExit(main(["dist", "--config", str(CONFIG), *sys.argv[1:]]))
