"""Tests for the command built by run_tests.py."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from run_tests import main, pytest_command  # noqa: E402


class TestRunTests:
    def test_verbose_by_default(self):
        assert pytest_command([]) == [sys.executable, "-m", "pytest", "tests/", "-v"]

    def test_extra_arguments_are_forwarded(self):
        cmd = pytest_command(["-q", "-k", "lattice"])
        assert cmd[-3:] == ["-q", "-k", "lattice"] and "-v" not in cmd

    def test_exit_code_is_returned(self, monkeypatch, capsys):
        calls = []

        class Done:
            returncode = 5

        def fake_run(cmd):
            calls.append(cmd)
            return Done()

        monkeypatch.setattr("run_tests.subprocess.run", fake_run)
        assert main(["-x"]) == 5
        assert calls == [pytest_command(["-x"])]
        assert "pytest exit code 5" in capsys.readouterr().out
