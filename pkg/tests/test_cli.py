"""Tests for the notjs command-line interface."""

import json
import shutil

import matplotlib

matplotlib.use("Agg")

import pytest  # noqa: E402

from notjsAbsInt.cli import (CORPUS_DIR, EXIT_FAILED, EXIT_INCOMPLETE, EXIT_OK, EXIT_USAGE,  # noqa: E402
                             cli_main, load_corpus)


def path(name):
    return str(CORPUS_DIR / f"{name}.njs")


class TestAnalyze:
    """Test class for ``notjs analyze``."""

    def test_json_output(self, capsys):
        code = cli_main(["analyze", path("type_errors"), "--format", "json", "--no-timing"])
        data = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK
        assert data["counts"]["total"] == 2 and data["stats"]["millis"] == 0

    @pytest.mark.parametrize("name, sensitivity", [("closures", "stack:2.1"),
                                                   ("prototypes", "obj:1.0"),
                                                   ("exceptions", "fs")])
    def test_json_output_is_reproducible(self, capsys, name, sensitivity):
        argv = ["analyze", path(name), "-s", sensitivity, "--format", "json", "--no-timing"]
        assert cli_main(argv) == EXIT_OK
        first = capsys.readouterr().out
        assert cli_main(argv) == EXIT_OK
        assert capsys.readouterr().out == first

    def test_fail_on_errors(self, capsys):
        assert cli_main(["analyze", path("type_errors"), "--fail-on-errors"]) == EXIT_FAILED
        assert cli_main(["analyze", path("straight_line"), "--fail-on-errors"]) == EXIT_OK
        assert "0 errors at 0 sites" in capsys.readouterr().out

    def test_incomplete(self, capsys):
        code = cli_main(["analyze", path("recursion"), "--max-iterations", "3"])
        assert code == EXIT_INCOMPLETE
        assert "analysis incomplete" in capsys.readouterr().out

    def test_dump(self, tmp_path):
        out = tmp_path / "partition.jsonl"
        assert cli_main(["analyze", path("labels"), "--dump", str(out)]) == EXIT_OK
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert records and all("point" in r for r in records)

    @pytest.mark.parametrize("argv, message", [
        (["analyze", "missing.njs"], "cannot read"),
        (["analyze", "FILE", "-s", "stack:1.1"], "h must be < k"),
        (["analyze", "FILE", "--max-iterations", "0"], "limits must be positive"),
        (["run", "FILE", "--fuel", "0"], "fuel must be positive"),
        (["fuzz", "--seeds", "a..b"], "bad seed range"),
        (["bench", "--sensitivities", "fs,nope"], "bad sensitivity"),
    ])
    def test_usage_errors(self, capsys, argv, message):
        argv = [path("straight_line") if a == "FILE" else a for a in argv]
        assert cli_main(argv) == EXIT_USAGE
        assert message in capsys.readouterr().err

    def test_malformed_program(self, capsys, tmp_path):
        bad = tmp_path / "bad.njs"
        bad.write_text("(decl ((x 1))\n  (:= y x))")
        assert cli_main(["analyze", str(bad)]) == EXIT_USAGE
        assert "unbound variable y" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        assert cli_main(["frobnicate"]) == EXIT_USAGE


class TestOtherCommands:
    def test_run(self, capsys):
        assert cli_main(["run", path("forin")]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == ["abc", "Halted(undef)"]

    def test_check(self, capsys):
        assert cli_main(["check", path("closures"), "-s", "stack:2.1"]) == EXIT_OK
        assert "0 violations" in capsys.readouterr().out

    def test_fuzz(self, capsys):
        code = cli_main(["fuzz", "--seeds", "0..2", "--size", "30",
                         "--sensitivity-set", "fs,stack:1.0"])
        assert code == EXIT_OK
        assert "3 programs x 2 sensitivities: 0 violations" in capsys.readouterr().out

    def test_fuzz_at_default_size(self, capsys):
        code = cli_main(["fuzz", "--seeds", "7..7", "--sensitivity-set", "fs"])
        assert code == EXIT_OK
        assert "1 programs x 1 sensitivities: 0 violations" in capsys.readouterr().out

    def test_bench_with_plots(self, capsys, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for name in ("identity", "straight_line"):
            shutil.copy(CORPUS_DIR / f"{name}.njs", corpus)
        plot, perf = tmp_path / "precision.png", tmp_path / "time.png"
        code = cli_main(["bench", "--corpus", str(corpus), "--sensitivities", "fs,stack:2.1",
                         "--plot", str(plot), "--perf-plot", str(perf)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert plot.exists() and perf.exists()
        assert out.count("Plot saved to:") == 2
        assert out.splitlines()[1].startswith("identity")

    def test_bundled_corpus_loads(self):
        names = [name for name, _ in load_corpus()]
        assert len(names) >= 15 and names == sorted(names)
