"""
Module execution entry point.

This allows the package to be run with:
python -m glt_lab
"""

import sys

from . import main

if __name__ == "__main__":
    sys.exit(main())
