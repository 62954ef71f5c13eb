"""End-to-end command-line tests.

The ``run`` tests drive the full stack with scripted model responses and the
real script-execution worker, so a passing run here covers the executable
wiring: argument parsing, dataset loading, engine, tools, logs, and reports.
"""
from __future__ import annotations

import json
from pathlib import Path

import pytest

import trace_fixtures as tf
from stepvote.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


class TestGrade:
    def test_correct_answer_exits_zero(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["grade", r"\frac{1}{2}", "0.5"]) == 0
        assert capsys.readouterr().out == "correct\n"

    def test_wrong_answer_exits_one(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["grade", "3", "4"]) == 1
        assert capsys.readouterr().out == "incorrect\n"


class TestRunScripted:
    def run_gap_demo(self, tmp_path: Path, extra: list[str] | None = None) -> Path:
        out = tmp_path / "results"
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                str(FIXTURES / "gap_demo.dataset.jsonl"),
                "--mock",
                str(FIXTURES / "gap_demo.mock.jsonl"),
                "--threshold",
                "1",
                "--out",
                str(out),
                *(extra or []),
            ]
        )
        assert code == 0
        return out

    def test_gap_demo_with_real_script_worker(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        # No --code-cmd and no canned outputs: the code candidates run through
        # the real sandbox worker, which must reproduce the pinned outputs.
        out = self.run_gap_demo(tmp_path)
        stdout = capsys.readouterr().out
        assert "accuracy                1.0000" in stdout

        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["problems"] == 1
        assert report["correct"] == 1
        assert report["errored"] == 0
        assert report["total_calls"] == 14

        _, rows = _read_log(out / "run_log.jsonl")
        trace = rows[0]["trace"]
        code_candidate = trace["steps"][0]["candidates"][1]
        assert code_candidate["tool"] == "code"
        assert code_candidate["tool_output"] == "1"

    def test_maxval_run_executes_the_sympy_script_live(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """The fixture's pinned tool output must match a live execution."""
        out = tmp_path / "results"
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                str(FIXTURES / "maxval.dataset.jsonl"),
                "--mock",
                str(FIXTURES / "maxval.mock.jsonl"),
                "--canned-symbolic",
                str(FIXTURES / "maxval.symbolic.jsonl"),
                "--threshold",
                "1",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert "accuracy                1.0000" in capsys.readouterr().out

        _, rows = _read_log(out / "run_log.jsonl")
        trace = rows[0]["trace"]
        script_candidate = trace["steps"][1]["candidates"][1]
        assert script_candidate["tool_payload"] == tf.MAXVAL_SCRIPT
        # the real worker's output agrees with the canned fixture value
        assert script_candidate["tool_output"] == tf.MAXVAL_SCRIPT_OUTPUT
        assert not script_candidate["tool_error"]
        query_candidate = trace["steps"][2]["candidates"][2]
        assert query_candidate["tool_payload"] == tf.MAXVAL_QUERY
        assert query_candidate["tool_output"] == tf.MAXVAL_QUERY_RESULT

    def test_missing_scripted_response_is_an_error_row(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        # maxval dataset with the gap-demo mock: every call misses the script,
        # so the problem errors but the run itself completes
        out = tmp_path / "results"
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                str(FIXTURES / "maxval.dataset.jsonl"),
                "--mock",
                str(FIXTURES / "gap_demo.mock.jsonl"),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["errored"] == 1
        assert report["correct"] == 0

    def test_report_command_re_renders_a_run_log(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        out = self.run_gap_demo(tmp_path)
        capsys.readouterr()
        assert main(["report", str(out / "run_log.jsonl")]) == 0
        assert "accuracy                1.0000" in capsys.readouterr().out

    def test_report_out_writes_files(self, tmp_path: Path) -> None:
        out = self.run_gap_demo(tmp_path)
        report_dir = tmp_path / "rerender"
        assert main(["report", str(out / "run_log.jsonl"), "--out", str(report_dir)]) == 0
        assert (report_dir / "report.json").exists()
        assert (report_dir / "report.txt").exists()

    def test_resume_continues_an_existing_log(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        out = self.run_gap_demo(tmp_path)
        log = out / "run_log.jsonl"
        # resuming with an empty mock script must not re-run anything
        empty_mock = tmp_path / "empty.mock.jsonl"
        empty_mock.write_text("", encoding="utf-8")
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                str(FIXTURES / "gap_demo.dataset.jsonl"),
                "--mock",
                str(empty_mock),
                "--threshold",
                "1",
                "--out",
                str(out),
                "--resume",
                str(log),
            ]
        )
        assert code == 0
        _, rows = _read_log(log)
        assert len(rows) == 1
        assert rows[0]["graded"] is True


class TestErrorHandling:
    def test_missing_dataset_exits_two(self, capsys: pytest.CaptureFixture[str]) -> None:
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                "/nonexistent/problems.jsonl",
                "--out",
                "/tmp/unused-out",
            ]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_unscripted_live_run_without_endpoint_exits_two(
        self,
        tmp_path: Path,
        capsys: pytest.CaptureFixture[str],
        monkeypatch: pytest.MonkeyPatch,
    ) -> None:
        monkeypatch.delenv("STEPVOTE_ENDPOINT", raising=False)
        monkeypatch.delenv("STEPVOTE_MODEL", raising=False)
        code = main(
            [
                "run",
                "--method",
                "multitag",
                "--dataset",
                str(FIXTURES / "gap_demo.dataset.jsonl"),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "no model endpoint" in capsys.readouterr().err

    def test_bad_mix_for_token_mv_exits_two(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        code = main(
            [
                "run",
                "--method",
                "token-mv",
                "--dataset",
                str(FIXTURES / "gap_demo.dataset.jsonl"),
                "--mix",
                "code,symbolic",
                "--mock",
                str(FIXTURES / "gap_demo.mock.jsonl"),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2


def _read_log(path: Path) -> tuple[dict | None, list[dict]]:
    header = None
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("kind") == "header":
            header = record
        else:
            rows.append(record)
    return header, rows
