#!/usr/bin/env python3
"""
Quick start script for nonneg-sdde

    python run.py check specs/discrete_delay.json --out out/
"""

import sys

from src.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
