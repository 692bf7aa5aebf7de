#!/usr/bin/env python3
"""
HPDP Dataflow Lab v1.0.0
========================
Role: Root launcher for the `bench` command line (see hpdp/main.py).

  python bench.py run --seed 42 --csv out/table1.csv --svg out/table1.svg
"""

import os
import sys

# Ensure project root is in path
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

try:
    from hpdp.main import main
except ImportError as e:
    print(f"❌ CRITICAL IMPORT ERROR: {e}")
    sys.exit(2)

if __name__ == "__main__":
    sys.exit(main())
