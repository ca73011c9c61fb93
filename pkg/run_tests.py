#!/usr/bin/env python3
"""Run the notjsAbsInt test suite; extra arguments are passed to pytest."""

import subprocess
import sys


def pytest_command(argv):
    """pytest invocation over tests/, verbose unless ``-q`` is given."""
    flags = [] if "-q" in argv else ["-v"]
    return [sys.executable, "-m", "pytest", "tests/", *flags, *argv]


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    code = subprocess.run(pytest_command(argv)).returncode
    print("\nAll tests passed" if code == 0 else f"\nTests failed (pytest exit code {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
