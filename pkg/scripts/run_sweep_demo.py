#!/usr/bin/env python3
"""Run the shipped phase-rate robustness sweep demo."""
import sys
from pathlib import Path

from tcadet.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "sweep_demo.yaml"

if __name__ == "__main__":
    raise SystemExit(main(["sweep", "--config", str(CONFIG), *sys.argv[1:]]))
