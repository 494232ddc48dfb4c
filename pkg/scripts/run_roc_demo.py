#!/usr/bin/env python3
"""Run both shipped ROC demos (tight and weak coupling)."""
import sys
from pathlib import Path

from tcadet.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

if __name__ == "__main__":
    for name in ("roc_demo_tc.yaml", "roc_demo_wc.yaml"):
        status = main(["roc", "--config", str(CONFIGS / name), *sys.argv[1:]])
        if status != 0:
            raise SystemExit(status)
