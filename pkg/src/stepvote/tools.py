"""Executor-side plumbing: tool assignment, payload parsing, tool clients.

An executor response is plain text. For code- and symbolic-assigned executors
the first complete fenced block (```python or ```wolfram) is the tool payload;
its output is appended to the step in an ```output / ```result block, matching
the framing the prompts describe. A reasoning-assigned executor never runs
tools, even if its text happens to contain a fenced block.

Tool failures are data, not exceptions: the error text lands in the output
block and the candidate is flagged, so a broken script still yields a usable
candidate step.
"""
from __future__ import annotations

import json
import logging
import os
import re
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from . import prompts
from .errors import ToolError
from .gateway import ChatRequest, ChatResponse, Gateway, RoleKind, RoleTag
from .types import Problem, RunConfig, StepCandidate, ToolKind

logger = logging.getLogger(__name__)

DEFAULT_CODE_TIMEOUT = 10.0
STEP_SEPARATOR = "\n---\n"

ENV_SYMBOLIC_URL = "STEPVOTE_SYMBOLIC_URL"
ENV_SYMBOLIC_APPID = "STEPVOTE_SYMBOLIC_APPID"


def assign_tool(k: int, tool_order: Sequence[ToolKind]) -> ToolKind:
    """Round-robin assignment: executor k (1-based) gets tool_order[(k-1) % t]."""
    if k < 1:
        raise ValueError("executor index is 1-based")
    if not tool_order:
        raise ValueError("tool_order must be non-empty")
    return tool_order[(k - 1) % len(tool_order)]


def render_progress(steps: Sequence[str]) -> str:
    """Join selected steps with the step separator; empty solution is ''."""
    return STEP_SEPARATOR.join(steps)


# --- response parsing ----------------------------------------------------------

_FINAL_ANSWER_RE = re.compile(r"<final_answer>(.*?)</final_answer>", re.S)


def detect_final_answer(text: str) -> str | None:
    """Boxed answer inside a complete <final_answer> tag pair, or None."""
    m = _FINAL_ANSWER_RE.search(text)
    if not m:
        return None
    from .answers import extract_boxed

    return extract_boxed(m.group(1))


def extract_fenced(text: str, lang: str) -> str | None:
    """Payload of the first complete ```lang fenced block.

    Returns None when there is no block. An opening fence that never closes,
    an empty payload, or extra blocks after the first are logged and ignored —
    the response is then treated as prose.
    """
    pattern = re.compile(rf"```{re.escape(lang)}[ \t]*\n(.*?)```", re.S)
    matches = pattern.findall(text)
    if not matches:
        if f"```{lang}" in text:
            logger.warning("unclosed %s fence; treating response as prose", lang)
        return None
    if len(matches) > 1:
        logger.warning("%d %s fences; only the first is executed", len(matches), lang)
    payload = matches[0].rstrip("\n")
    if not payload.strip():
        logger.warning("empty %s fence; treating response as prose", lang)
        return None
    return payload


# --- tool clients ----------------------------------------------------------------


@dataclass(frozen=True)
class ToolResult:
    ok: bool
    output: str

    def __post_init__(self) -> None:
        if not self.ok and not self.output:
            raise ValueError("a failed tool result must carry error text")


class CodeRunner(Protocol):
    def run(self, script: str, timeout: float) -> ToolResult: ...


class SymbolicClient(Protocol):
    def query(self, query: str) -> ToolResult: ...


class SandboxCodeRunner:
    """Client for the line-delimited script-execution worker protocol.

    Speaks JSON-per-line over the worker's stdin/stdout. The worker runs each
    script in a fresh child process, so state never leaks between candidates.
    One worker serves requests serially; instances are not shareable across
    threads without external locking (the internal lock serializes callers).
    """

    def __init__(self, command: Sequence[str] | None = None):
        self.command = list(command) if command else [sys.executable, "-m", "scriptbox"]
        self._proc: subprocess.Popen[str] | None = None
        self._lock = threading.Lock()
        self._counter = 0

    def _ensure_worker(self) -> subprocess.Popen[str]:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        return self._proc

    def run(self, script: str, timeout: float) -> ToolResult:
        with self._lock:
            self._counter += 1
            request = {
                "v": 1,
                "kind": "exec",
                "id": f"r{self._counter}",
                "script": script,
                "timeout": timeout,
            }
            try:
                proc = self._ensure_worker()
                assert proc.stdin is not None and proc.stdout is not None
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                self._reset()
                return ToolResult(False, f"script worker unavailable: {exc}")
            if not line:
                self._reset()
                return ToolResult(False, "script worker exited unexpectedly")
            try:
                response = json.loads(line)
            except json.JSONDecodeError:
                self._reset()
                return ToolResult(False, "script worker sent a malformed response")
        if response.get("id") != request["id"]:
            return ToolResult(False, "script worker response id mismatch")
        if response.get("ok"):
            return ToolResult(True, str(response.get("result_text")))
        return ToolResult(False, str(response.get("error") or "script failed"))

    def _reset(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None

    def close(self) -> None:
        with self._lock:
            if self._proc is not None and self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    self._reset()
                else:
                    self._proc = None


class CannedCodeRunner:
    """Fixture runner: exact script text maps to a canned result."""

    def __init__(self, outputs: Mapping[str, ToolResult]):
        self._outputs = dict(outputs)

    def run(self, script: str, timeout: float) -> ToolResult:
        result = self._outputs.get(script)
        if result is None:
            raise ToolError(f"no canned output for script:\n{script}")
        return result


class OfflineSymbolicClient:
    """Default symbolic client: always reports the tool as unavailable."""

    def query(self, query: str) -> ToolResult:
        return ToolResult(False, "symbolic tool offline: no endpoint configured")


class CannedSymbolicClient:
    """Fixture client: exact query text maps to a canned result."""

    def __init__(self, outputs: Mapping[str, ToolResult]):
        self._outputs = dict(outputs)

    def query(self, query: str) -> ToolResult:
        result = self._outputs.get(query)
        if result is None:
            raise ToolError(f"no canned output for query: {query!r}")
        return result


class HttpSymbolicClient:
    """Short-answer API client for a symbolic computation endpoint."""

    def __init__(self, url: str | None = None, appid: str | None = None, timeout: float = 30.0):
        import httpx

        self.url = url or os.environ.get(ENV_SYMBOLIC_URL)
        self.appid = appid or os.environ.get(ENV_SYMBOLIC_APPID)
        if not self.url:
            from .errors import ConfigError

            raise ConfigError(f"no symbolic endpoint: pass url= or set {ENV_SYMBOLIC_URL}")
        self._client = httpx.Client(timeout=timeout)

    def query(self, query: str) -> ToolResult:
        import httpx

        params = {"i": query}
        if self.appid:
            params["appid"] = self.appid
        try:
            response = self._client.get(self.url, params=params)
        except httpx.TransportError as exc:
            return ToolResult(False, f"symbolic endpoint unreachable: {exc}")
        if response.status_code != 200:
            return ToolResult(False, f"symbolic endpoint error: HTTP {response.status_code}")
        text = response.text.strip()
        if not text:
            return ToolResult(False, "symbolic endpoint returned no result")
        return ToolResult(True, text)


@dataclass
class ToolClients:
    code: CodeRunner = field(default_factory=SandboxCodeRunner)
    symbolic: SymbolicClient = field(default_factory=OfflineSymbolicClient)
    code_timeout: float = DEFAULT_CODE_TIMEOUT

    def close(self) -> None:
        close = getattr(self.code, "close", None)
        if close is not None:
            close()


def run_code_tool(script: str, runner: CodeRunner, timeout: float) -> ToolResult:
    if not script.strip():
        raise ValueError("empty script")
    return runner.run(script, timeout)


def run_symbolic_tool(query: str, client: SymbolicClient) -> ToolResult:
    if not query.strip():
        raise ValueError("empty query")
    return client.query(query)


# --- executor invocation ---------------------------------------------------------

_OUTPUT_FENCE = {ToolKind.CODE: "output", ToolKind.SYMBOLIC: "result"}
_PAYLOAD_FENCE = {ToolKind.CODE: "python", ToolKind.SYMBOLIC: "wolfram"}


def invoke_executor(
    k: int,
    problem: Problem,
    progress: str,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
    *,
    step_index: int,
) -> tuple[StepCandidate, ChatResponse]:
    """Run executor k for one step: model call, then its assigned tool.

    Returns the annotated candidate plus the raw model response (the caller
    accounts usage). An inline final answer short-circuits tool execution.
    """
    tool = assign_tool(k, config.tool_order)
    request = ChatRequest(
        system=prompts.executor_system(tool),
        user=prompts.executor_user(problem.statement, progress),
        temperature=config.executor_sampling.temperature,
        top_p=config.executor_sampling.top_p,
        max_output_tokens=config.max_output_tokens,
        role=RoleTag(RoleKind.EXECUTOR, tool.value),
        problem_id=problem.id,
        step_index=step_index,
        call_index=k,
    )
    response = gateway.chat(request)
    text = response.text

    inline = detect_final_answer(text)
    if inline is not None:
        return (
            StepCandidate(k, tool, content=text, inline_final_answer=inline),
            response,
        )

    if tool is ToolKind.COT:
        return StepCandidate(k, tool, content=text), response

    payload = extract_fenced(text, _PAYLOAD_FENCE[tool])
    if payload is None:
        return StepCandidate(k, tool, content=text), response

    if tool is ToolKind.CODE:
        result = run_code_tool(payload, tools.code, tools.code_timeout)
    else:
        result = run_symbolic_tool(payload, tools.symbolic)

    fence = _OUTPUT_FENCE[tool]
    content = f"{text}\n```{fence}\n{result.output}\n```"
    return (
        StepCandidate(
            k,
            tool,
            content=content,
            tool_payload=payload,
            tool_output=result.output,
            tool_error=not result.ok,
        ),
        response,
    )
