"""
Application Entry Point
=======================

This is the main script to run a GLT laboratory experiment.

Run with: python main.py <experiment> --config <path>
"""

import sys

from glt_lab import main

if __name__ == "__main__":
    sys.exit(main())
