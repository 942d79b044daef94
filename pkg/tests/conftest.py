"""Shared pytest setup: makes the ``crowdnav`` package under code/ importable."""

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
CODE_DIR = PROJECT_ROOT / "code"
if str(CODE_DIR) not in sys.path:
    sys.path.insert(0, str(CODE_DIR))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long batch runs over many episodes")
