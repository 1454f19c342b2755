#!/usr/bin/env python3
"""
Distributed AIA CLI Runner

This script allows running the CLI directly without pip install.

Usage:
    ./aia.py plan --scenario desk --seed 1
    ./aia.py bench --scenario bench_template --cells 4/4,8/8
    ./aia.py --help
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli.main import main

if __name__ == "__main__":
    main()
