"""Command-line interface.

    stepvote run --method multitag --dataset problems.jsonl --out results/
    stepvote grade "<predicted>" "<truth>"
    stepvote report results/run_log.jsonl
"""
from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from . import harness
from .answers import grade as grade_answers
from .answers import parse_answer
from .errors import ConfigError, StepvoteError
from .gateway import Gateway, HttpGateway, MockGateway
from .tools import (
    CannedSymbolicClient,
    HttpSymbolicClient,
    OfflineSymbolicClient,
    SandboxCodeRunner,
    ToolClients,
    ToolResult,
    ENV_SYMBOLIC_URL,
)
from .types import (
    DEFAULT_CONSISTENCY_THRESHOLD,
    DEFAULT_MAX_EXECUTORS,
    DEFAULT_STEP_CAP,
    MethodKind,
    MethodSpec,
    RunConfig,
    SelectionMode,
    ToolKind,
)
from .baselines import DEFAULT_MV_SAMPLES, token_matched_samples

_METHOD_CHOICES = ("multitag", "cot", "code", "symbolic", "mv", "token-mv")


def _build_method(args: argparse.Namespace) -> MethodSpec:
    try:
        if args.method == "multitag":
            return MethodSpec(MethodKind.MULTI_TOOL_STEPWISE)
        if args.method in ("cot", "code", "symbolic"):
            return MethodSpec(MethodKind.SINGLE_TOOL, tool=ToolKind(args.method))
        mix = tuple(ToolKind(t.strip()) for t in args.mix.split(","))
        if args.method == "mv":
            samples = args.samples or DEFAULT_MV_SAMPLES
            return MethodSpec(MethodKind.MAJORITY_VOTE, tool_mix=mix, samples=samples)
        samples = args.samples or token_matched_samples(mix)
        return MethodSpec(MethodKind.TOKEN_MATCHED_MV, tool_mix=mix, samples=samples)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        max_executors=args.max_executors,
        consistency_threshold=args.threshold,
        step_cap=args.step_cap,
        selection_mode=SelectionMode(args.selection),
        selection_seed=args.seed,
    )


def _build_gateway(args: argparse.Namespace) -> Gateway:
    if args.mock:
        return MockGateway.from_file(args.mock)
    return HttpGateway()


def _tools_factory(args: argparse.Namespace):
    import json
    import os

    canned_symbolic = None
    if args.canned_symbolic:
        table = {}
        with open(args.canned_symbolic, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                table[row["query"]] = ToolResult(bool(row.get("ok", True)), row["output"])
        canned_symbolic = table

    code_cmd = shlex.split(args.code_cmd) if args.code_cmd else None

    def factory() -> ToolClients:
        if canned_symbolic is not None:
            symbolic = CannedSymbolicClient(canned_symbolic)
        elif os.environ.get(ENV_SYMBOLIC_URL):
            symbolic = HttpSymbolicClient()
        else:
            symbolic = OfflineSymbolicClient()
        return ToolClients(code=SandboxCodeRunner(code_cmd), symbolic=symbolic)

    return factory


def _cmd_run(args: argparse.Namespace) -> int:
    problems = harness.load_dataset(args.dataset)
    method = _build_method(args)
    config = _build_config(args)
    gateway = _build_gateway(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.resume) if args.resume else out_dir / "run_log.jsonl"
    rows = harness.run_method(
        problems,
        method,
        config,
        gateway,
        _tools_factory(args),
        log_path,
        dataset_name=Path(args.dataset).name,
        parallel=args.parallel,
        resume=bool(args.resume),
    )
    header = harness._header(method, config, Path(args.dataset).name)
    report = harness.emit_report(rows, out_dir, header)
    sys.stdout.write(harness.render_report(report))
    sys.stdout.write(f"\nrun log: {log_path}\nreport: {out_dir / 'report.json'}\n")
    return 0


def _cmd_grade(args: argparse.Namespace) -> int:
    predicted = parse_answer(args.predicted)
    ok = grade_answers(predicted, args.truth)
    sys.stdout.write("correct\n" if ok else "incorrect\n")
    return 0 if ok else 1


def _cmd_report(args: argparse.Namespace) -> int:
    header, rows = harness.read_run_log(args.runlog)
    rows.sort(key=lambda r: r.get("seq", 0))
    report = harness.summarize(rows, header)
    sys.stdout.write(harness.render_report(report))
    if args.out:
        harness.emit_report(rows, args.out, header)
        sys.stdout.write(f"\nreport: {Path(args.out) / 'report.json'}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepvote", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a method over a dataset")
    run.add_argument("--method", choices=_METHOD_CHOICES, required=True)
    run.add_argument("--dataset", required=True, help="line-delimited problems file")
    run.add_argument("--max-executors", type=int, default=DEFAULT_MAX_EXECUTORS)
    run.add_argument("--threshold", type=int, default=DEFAULT_CONSISTENCY_THRESHOLD)
    run.add_argument(
        "--selection",
        choices=[m.value for m in SelectionMode],
        default=SelectionMode.FULL.value,
    )
    run.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    run.add_argument("--parallel", type=int, default=1)
    run.add_argument("--mock", help="scripted-backend file; omits live calls")
    run.add_argument("--resume", help="existing run log to continue")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--mix", default="cot,code,symbolic", help="tool mix for voting methods")
    run.add_argument("--samples", type=int, help="sample count for voting methods")
    run.add_argument("--seed", type=int, default=0, help="selection seed")
    run.add_argument("--code-cmd", help="override the script-worker command line")
    run.add_argument("--canned-symbolic", help="canned symbolic outputs (line-delimited)")
    run.set_defaults(func=_cmd_run)

    grade_cmd = sub.add_parser("grade", help="grade a predicted answer against truth")
    grade_cmd.add_argument("predicted")
    grade_cmd.add_argument("truth")
    grade_cmd.set_defaults(func=_cmd_grade)

    report_cmd = sub.add_parser("report", help="re-render a run log")
    report_cmd.add_argument("runlog")
    report_cmd.add_argument("--out", help="directory to write report files")
    report_cmd.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StepvoteError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
