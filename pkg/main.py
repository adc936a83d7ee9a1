#!/usr/bin/env python3
"""
apflow entry point
Runs benchmark configurations, convergence studies and the validation suite
"""

import sys

from apflow.cli import main

if __name__ == "__main__":
    sys.exit(main())
