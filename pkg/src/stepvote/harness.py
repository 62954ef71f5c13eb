"""Benchmark running: datasets, run logs, metrics, reports.

A run writes an append-only line-delimited log: one header record echoing the
configuration, then one record per completed problem, flushed as it lands.
Resuming reads the log, verifies the header matches the requested run, and
skips problems already present, so an interrupted run continues rather than
restarts. Records carry a ``seq`` (dataset position) so reports are ordered
identically whether or not the run was interrupted.

Metric definitions: accuracy = correct ÷ problems; cost is exact in integer
quarter-units (prompt tokens count 1/4 each) and reported per problem as a
float; calls per step = total calls ÷ total steps (ratio of sums); steps per
problem = total steps ÷ problems. Step counts only exist for the step-wise
method; baseline rows leave them null and the step metrics are omitted.
"""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import baselines, engine
from .answers import grade
from .errors import ConfigError, DatasetError
from .gateway import Gateway
from .tools import ToolClients
from .types import (
    MethodKind,
    MethodSpec,
    Problem,
    RunConfig,
    SolutionTrace,
    UsageLedger,
    ledger_to_dict,
    trace_to_dict,
)

logger = logging.getLogger(__name__)

LOG_FORMAT_VERSION = 1


# --- datasets ------------------------------------------------------------------


def _parse_level(value: Any) -> int | None:
    if value is None:
        return None
    if isinstance(value, int):
        return value if 1 <= value <= 5 else None
    if isinstance(value, str):
        text = value.strip()
        if text.lower().startswith("level"):
            text = text[5:].strip()
        if text.isdigit() and 1 <= int(text) <= 5:
            return int(text)
    return None


def load_dataset(path: str | Path) -> list[Problem]:
    """Load a line-delimited dataset: objects with problem/answer (required),
    id or unique_id, level, subject or type (optional)."""
    problems: list[Problem] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise DatasetError(f"{path}:{lineno}: expected an object")
            if "problem" not in row:
                raise DatasetError(f"{path}:{lineno}: missing field 'problem'")
            if "answer" not in row:
                raise DatasetError(f"{path}:{lineno}: missing field 'answer'")
            pid = str(row.get("id") or row.get("unique_id") or f"item-{lineno}")
            if pid in seen_ids:
                raise DatasetError(f"{path}:{lineno}: duplicate problem id {pid!r}")
            seen_ids.add(pid)
            problems.append(
                Problem(
                    id=pid,
                    statement=str(row["problem"]),
                    answer=str(row["answer"]),
                    level=_parse_level(row.get("level")),
                    subject=row.get("subject") or row.get("type"),
                )
            )
    return problems


# --- per-problem rows ------------------------------------------------------------


def _trace_row(problem: Problem, seq: int, trace: SolutionTrace) -> dict[str, Any]:
    graded = grade(trace.final_answer, problem.answer) if problem.answer is not None else False
    flagged = [s.step_index for s in trace.steps if s.selection.all_estimates_failed]
    return {
        "kind": "row",
        "seq": seq,
        "problem_id": problem.id,
        "level": problem.level,
        "subject": problem.subject,
        "answer": trace.final_answer.to_dict() if trace.final_answer else None,
        "truth": problem.answer,
        "graded": graded,
        "terminated_by": trace.terminated_by.value,
        "steps": len(trace.steps),
        "calls": trace.ledger.calls,
        "ledger": ledger_to_dict(trace.ledger),
        "flagged_steps": flagged,
        "error": None,
        "trace": trace_to_dict(trace),
    }


def _baseline_row(
    problem: Problem, seq: int, result: baselines.BaselineResult
) -> dict[str, Any]:
    graded = grade(result.answer, problem.answer) if problem.answer is not None else False
    return {
        "kind": "row",
        "seq": seq,
        "problem_id": problem.id,
        "level": problem.level,
        "subject": problem.subject,
        "answer": result.answer.to_dict() if result.answer else None,
        "truth": problem.answer,
        "graded": graded,
        "terminated_by": None,
        "steps": None,
        "calls": result.ledger.calls,
        "ledger": ledger_to_dict(result.ledger),
        "error": None,
        "samples": [
            {
                "index": s.index,
                "tool": s.tool.value,
                "estimate": s.estimate.to_dict() if s.estimate else None,
                "tool_error": s.tool_error,
                "ledger": ledger_to_dict(s.ledger),
            }
            for s in result.samples
        ],
    }


def _error_row(problem: Problem, seq: int, exc: Exception) -> dict[str, Any]:
    return {
        "kind": "row",
        "seq": seq,
        "problem_id": problem.id,
        "level": problem.level,
        "subject": problem.subject,
        "answer": None,
        "truth": problem.answer,
        "graded": False,
        "terminated_by": None,
        "steps": None,
        "calls": 0,
        "ledger": ledger_to_dict(UsageLedger()),
        "error": f"{type(exc).__name__}: {exc}",
    }


def _method_to_dict(method: MethodSpec) -> dict[str, Any]:
    return {
        "kind": method.kind.value,
        "tool": method.tool.value if method.tool else None,
        "tool_mix": [t.value for t in method.tool_mix],
        "samples": method.samples,
    }


def _header(method: MethodSpec, config: RunConfig, dataset_name: str) -> dict[str, Any]:
    return {
        "kind": "header",
        "format": LOG_FORMAT_VERSION,
        "dataset": dataset_name,
        "method": _method_to_dict(method),
        "config": config.to_dict(),
    }


# --- run management ---------------------------------------------------------------


def read_run_log(path: str | Path) -> tuple[dict[str, Any] | None, list[dict[str, Any]]]:
    """(header, rows) from a run log; header may be None for legacy/partial files."""
    header: dict[str, Any] | None = None
    rows: list[dict[str, Any]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if record.get("kind") == "header":
                header = record
            elif record.get("kind") == "row":
                rows.append(record)
            else:
                raise DatasetError(f"{path}:{lineno}: unknown record kind {record.get('kind')!r}")
    return header, rows


class _LogWriter:
    def __init__(self, path: Path, append: bool):
        self._fh = open(path, "a" if append else "w", encoding="utf-8")
        self._lock = threading.Lock()

    def write(self, record: Mapping[str, Any]) -> None:
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _solve_one(
    problem: Problem,
    seq: int,
    method: MethodSpec,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
) -> dict[str, Any]:
    if method.kind is MethodKind.MULTI_TOOL_STEPWISE:
        trace = engine.solve(problem, config, gateway, tools)
        return _trace_row(problem, seq, trace)
    result = baselines.solve_with_method(problem, method, config, gateway, tools)
    return _baseline_row(problem, seq, result)


def run_method(
    problems: Sequence[Problem],
    method: MethodSpec,
    config: RunConfig,
    gateway: Gateway,
    tools_factory: Callable[[], ToolClients],
    log_path: str | Path,
    *,
    dataset_name: str = "dataset",
    parallel: int = 1,
    resume: bool = False,
) -> list[dict[str, Any]]:
    """Run a method over a dataset, appending one record per problem to the
    run log. Returns all rows (existing plus new) ordered by dataset position.

    Per-problem failures become error rows; the run continues. With
    resume=True, problems whose ids already appear in the log are skipped and
    the header must match the requested method/config.
    """
    log_path = Path(log_path)
    done_rows: list[dict[str, Any]] = []
    if resume and log_path.exists():
        header, done_rows = read_run_log(log_path)
        expected = _header(method, config, dataset_name)
        if header is not None:
            for key in ("method", "config", "dataset"):
                if header.get(key) != expected[key]:
                    raise ConfigError(
                        f"resume mismatch: run log {key} differs from the requested run"
                    )
        writer = _LogWriter(log_path, append=True)
    else:
        writer = _LogWriter(log_path, append=False)
        writer.write(_header(method, config, dataset_name))

    done_ids = {row["problem_id"] for row in done_rows}
    todo = [(seq, p) for seq, p in enumerate(problems) if p.id not in done_ids]
    rows: list[dict[str, Any]] = list(done_rows)
    rows_lock = threading.Lock()

    local = threading.local()

    def tool_clients() -> ToolClients:
        if not hasattr(local, "tools"):
            local.tools = tools_factory()
        return local.tools

    def work(item: tuple[int, Problem]) -> None:
        seq, problem = item
        try:
            row = _solve_one(problem, seq, method, config, gateway, tool_clients())
        except Exception as exc:  # per-problem isolation: record and continue
            logger.warning("problem %s failed: %s", problem.id, exc)
            row = _error_row(problem, seq, exc)
        writer.write(row)
        with rows_lock:
            rows.append(row)

    try:
        if parallel <= 1:
            for item in todo:
                work(item)
        else:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                list(pool.map(work, todo))
    finally:
        writer.close()

    rows.sort(key=lambda r: r["seq"])
    return rows


# --- reporting ----------------------------------------------------------------------


def _accuracy(rows: Sequence[Mapping[str, Any]]) -> float | None:
    if not rows:
        return None
    return sum(1 for r in rows if r.get("graded")) / len(rows)


def breakdown(rows: Sequence[Mapping[str, Any]], key: str) -> list[dict[str, Any]]:
    """Accuracy per metadata bucket; rows without the key go to 'unlabeled'."""
    buckets: dict[str, list[Mapping[str, Any]]] = {}
    for row in rows:
        bucket = row.get(key)
        label = str(bucket) if bucket is not None else "unlabeled"
        buckets.setdefault(label, []).append(row)

    def bucket_order(label: str):
        return (0, int(label)) if label.isdigit() else (1, 0)

    out = []
    for label in sorted(buckets, key=lambda b: (bucket_order(b), b)):
        group = buckets[label]
        out.append(
            {
                "bucket": label,
                "n": len(group),
                "correct": sum(1 for r in group if r.get("graded")),
                "accuracy": _accuracy(group),
            }
        )
    return out


def summarize(
    rows: Sequence[Mapping[str, Any]], header: Mapping[str, Any] | None = None
) -> dict[str, Any]:
    """Aggregate a run log into the report structure."""
    n = len(rows)
    correct = sum(1 for r in rows if r.get("graded"))
    total_quarter_units = sum(r["ledger"]["cost_quarter_units"] for r in rows)
    total_calls = sum(r.get("calls") or 0 for r in rows)
    step_rows = [r for r in rows if r.get("steps") is not None]
    total_steps = sum(r["steps"] for r in step_rows)
    errored = sum(1 for r in rows if r.get("error"))

    report: dict[str, Any] = {
        "problems": n,
        "correct": correct,
        "errored": errored,
        "accuracy": _accuracy(rows),
        "total_cost_quarter_units": total_quarter_units,
        "mean_cost_per_problem": (
            float(Fraction(total_quarter_units, 4 * n)) if n else None
        ),
        "total_calls": total_calls,
        "mean_calls_per_problem": total_calls / n if n else None,
    }
    if step_rows:
        report["total_steps"] = total_steps
        report["mean_steps_per_problem"] = total_steps / len(step_rows)
        step_calls = sum(r["calls"] for r in step_rows)
        report["mean_calls_per_step"] = step_calls / total_steps if total_steps else None
    if any(r.get("level") is not None for r in rows):
        report["by_level"] = breakdown(rows, "level")
    if any(r.get("subject") is not None for r in rows):
        report["by_subject"] = breakdown(rows, "subject")
    if header is not None:
        report["run"] = {k: header.get(k) for k in ("dataset", "method", "config")}
    return report


def _fmt(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_report(report: Mapping[str, Any]) -> str:
    """Human-readable table."""
    lines = []
    lines.append(f"{'problems':<24}{_fmt(report.get('problems'))}")
    lines.append(f"{'correct':<24}{_fmt(report.get('correct'))}")
    lines.append(f"{'errored':<24}{_fmt(report.get('errored'))}")
    lines.append(f"{'accuracy':<24}{_fmt(report.get('accuracy'))}")
    lines.append(f"{'cost/problem':<24}{_fmt(report.get('mean_cost_per_problem'))}")
    lines.append(f"{'calls/problem':<24}{_fmt(report.get('mean_calls_per_problem'))}")
    if "mean_steps_per_problem" in report:
        lines.append(f"{'steps/problem':<24}{_fmt(report.get('mean_steps_per_problem'))}")
        lines.append(f"{'calls/step':<24}{_fmt(report.get('mean_calls_per_step'))}")
    for key, title in (("by_level", "level"), ("by_subject", "subject")):
        table = report.get(key)
        if not table:
            continue
        lines.append("")
        lines.append(f"{title:<16}{'n':>6}{'correct':>10}{'accuracy':>12}")
        for entry in table:
            lines.append(
                f"{entry['bucket']:<16}{entry['n']:>6}{entry['correct']:>10}"
                f"{_fmt(entry['accuracy']):>12}"
            )
    return "\n".join(lines) + "\n"


def emit_report(
    rows: Sequence[Mapping[str, Any]],
    out_dir: str | Path,
    header: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Write report.json and report.txt; returns the report dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = summarize(rows, header)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(render_report(report))
    return report
