#!/usr/bin/env python3
"""
Run script for SyncKern.
"""

import sys

from src.main import run_pipeline

if __name__ == "__main__":
    sys.exit(run_pipeline(sys.argv[1:]))
