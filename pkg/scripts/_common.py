import sys
from pathlib import Path

from hflop.cli import main

RESULTS = Path(__file__).resolve().parents[1] / "results"


def run(*args):
    RESULTS.mkdir(exist_ok=True)
    code = main([str(a) for a in args])
    if code:
        sys.exit(code)
