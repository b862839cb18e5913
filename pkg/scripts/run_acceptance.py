#!/usr/bin/env python3
"""Run the acceptance module and print only its criterion summary."""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                       str(root / "tests" / "test_acceptance.py"), *sys.argv[1:]],
                      capture_output=True, text=True)
out = proc.stdout
start = out.find("acceptance criteria")
print(out[out.rfind("\n", 0, start) + 1:] if start >= 0 else out)
sys.exit(proc.returncode)
