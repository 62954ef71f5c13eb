"""Model backends behind one small chat interface.

Everything that talks to a model goes through ``Gateway.chat`` so the engine
stays backend-agnostic. Three implementations:

* ``HttpGateway``: a chat-completions endpoint over HTTP, configured by
  arguments or environment, with capped retries and injectable backoff.
* ``MockGateway``: fully scripted responses keyed by (problem, step, call,
  role); any unscripted request is an error, which keeps fixture runs honest.
* ``RecordingGateway`` / ``ReplayGateway``: cassette capture and replay keyed
  by a request fingerprint, for offline tests against recorded traffic.
"""
from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import httpx

from .errors import ConfigError, GatewayError, MockScriptError

DEFAULT_TIMEOUT_SECONDS = 60.0
MAX_ATTEMPTS = 3
BACKOFF_SECONDS = (1.0, 2.0, 4.0)

ENV_ENDPOINT = "STEPVOTE_ENDPOINT"
ENV_MODEL = "STEPVOTE_MODEL"
ENV_API_KEY = "STEPVOTE_API_KEY"
ENV_TIMEOUT = "STEPVOTE_TIMEOUT"


class RoleKind(enum.Enum):
    EXECUTOR = "executor"
    COMPLETER = "completer"
    BASELINE = "baseline"  # one-shot baseline solutions
    REFORMAT = "reformat"  # turn raw symbolic-tool output into a boxed answer


@dataclass(frozen=True)
class RoleTag:
    kind: RoleKind
    tool: str | None = None  # tool slug for executor/solver calls


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float
    top_p: float
    max_output_tokens: int
    role: RoleTag
    # earlier conversation turns as (role, content), before the user message;
    # used by the symbolic baseline's conversion call
    history: tuple[tuple[str, str], ...] = ()
    # routing metadata for scripted backends and cassettes; not sent upstream
    problem_id: str | None = None
    step_index: int | None = None
    call_index: int | None = None


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    backend_id: str


class Gateway(Protocol):
    def chat(self, request: ChatRequest) -> ChatResponse: ...


def whitespace_tokens(text: str) -> int:
    """Token proxy used by scripted backends: whitespace-separated chunks."""
    return len(text.split())


# --- scripted mock -----------------------------------------------------------

ScriptKey = tuple[str, int, int, str]  # (problem_id, step, call, role)


class MockGateway:
    """Deterministic scripted backend.

    The script maps (problem_id, step_index, call_index, role kind) to a
    response text. Prompt/completion token counts are whitespace counts, so
    costs are reproducible. Every request is recorded for assertions.
    """

    def __init__(self, script: Mapping[ScriptKey, str]):
        self._script = dict(script)
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "MockGateway":
        return cls(load_mock_script(path))

    def chat(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(request)
        key = (
            request.problem_id or "",
            request.step_index if request.step_index is not None else -1,
            request.call_index if request.call_index is not None else -1,
            request.role.kind.value,
        )
        text = self._script.get(key)
        if text is None:
            raise MockScriptError(
                f"no scripted response for problem={key[0]!r} step={key[1]} "
                f"call={key[2]} role={key[3]!r}"
            )
        prompt_tokens = whitespace_tokens(request.system) + whitespace_tokens(request.user)
        prompt_tokens += sum(whitespace_tokens(content) for _, content in request.history)
        return ChatResponse(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=whitespace_tokens(text),
            backend_id="mock",
        )

    def requests_by_role(self, kind: RoleKind) -> list[ChatRequest]:
        with self._lock:
            return [r for r in self.requests if r.role.kind is kind]


_REQUIRED_SCRIPT_FIELDS = ("problem_id", "step", "call", "role", "text")


def load_mock_script(path: str | Path) -> dict[ScriptKey, str]:
    """Load a line-delimited mock script, validating as it goes."""
    script: dict[ScriptKey, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MockScriptError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise MockScriptError(f"{path}:{lineno}: expected an object")
            missing = [f for f in _REQUIRED_SCRIPT_FIELDS if f not in row]
            if missing:
                raise MockScriptError(f"{path}:{lineno}: missing fields {missing}")
            if row["role"] not in {k.value for k in RoleKind}:
                raise MockScriptError(f"{path}:{lineno}: unknown role {row['role']!r}")
            key = (str(row["problem_id"]), int(row["step"]), int(row["call"]), str(row["role"]))
            if key in script:
                raise MockScriptError(f"{path}:{lineno}: duplicate key {key}")
            script[key] = str(row["text"])
    return script


# --- HTTP backend ------------------------------------------------------------


class HttpGateway:
    """Chat-completions client with capped retries.

    Retries transport errors, 429s and 5xx responses with 1/2/4s backoff;
    anything else is raised immediately as GatewayError. The sleeper is
    injectable so tests don't wait.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float | None = None,
        max_attempts: int = MAX_ATTEMPTS,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.model = model or os.environ.get(ENV_MODEL)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        if not self.endpoint:
            raise ConfigError(f"no model endpoint: pass endpoint= or set {ENV_ENDPOINT}")
        if not self.model:
            raise ConfigError(f"no model name: pass model= or set {ENV_MODEL}")
        if timeout is None:
            raw = os.environ.get(ENV_TIMEOUT)
            try:
                timeout = float(raw) if raw else DEFAULT_TIMEOUT_SECONDS
            except ValueError as exc:
                raise ConfigError(f"{ENV_TIMEOUT} must be a number, got {raw!r}") from exc
        if max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        self.max_attempts = max_attempts
        self._sleeper = sleeper
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(
            timeout=timeout, headers=headers, transport=transport
        )

    def close(self) -> None:
        self._client.close()

    def _payload(self, request: ChatRequest) -> dict[str, Any]:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        for role, content in request.history:
            messages.append({"role": role, "content": content})
        messages.append({"role": "user", "content": request.user})
        return {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_output_tokens,
        }

    def chat(self, request: ChatRequest) -> ChatResponse:
        assert self.endpoint is not None
        payload = self._payload(request)
        last_error: str = "unknown"
        for attempt in range(self.max_attempts):
            try:
                response = self._client.post(self.endpoint, json=payload)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = f"HTTP {response.status_code}"
                elif response.status_code >= 400:
                    raise GatewayError(
                        f"model endpoint rejected request: HTTP {response.status_code}: "
                        f"{response.text[:500]}"
                    )
                else:
                    return self._parse(response)
            if attempt + 1 < self.max_attempts:
                self._sleeper(BACKOFF_SECONDS[min(attempt, len(BACKOFF_SECONDS) - 1)])
        raise GatewayError(f"model endpoint failed after {self.max_attempts} attempts: {last_error}")

    def _parse(self, response: httpx.Response) -> ChatResponse:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed completion payload: {exc}") from exc
        usage = body.get("usage") or {}
        return ChatResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", whitespace_tokens(text))),
            backend_id=str(self.model),
        )


# --- cassettes ---------------------------------------------------------------


def request_fingerprint(request: ChatRequest) -> str:
    """Stable digest of the request content (metadata excluded)."""
    blob = json.dumps(
        {
            "system": request.system,
            "user": request.user,
            "history": list(request.history),
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_output_tokens": request.max_output_tokens,
            "role": request.role.kind.value,
            "tool": request.role.tool,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class RecordingGateway:
    """Wraps a live gateway and appends request/response pairs to a cassette."""

    def __init__(self, inner: Gateway, cassette_path: str | Path):
        self._inner = inner
        self._path = Path(cassette_path)
        self._lock = threading.Lock()

    def chat(self, request: ChatRequest) -> ChatResponse:
        response = self._inner.chat(request)
        row = {
            "fingerprint": request_fingerprint(request),
            "request": {
                "system": request.system,
                "user": request.user,
                "history": list(request.history),
                "temperature": request.temperature,
                "top_p": request.top_p,
                "max_output_tokens": request.max_output_tokens,
                "role": request.role.kind.value,
                "tool": request.role.tool,
                "problem_id": request.problem_id,
                "step_index": request.step_index,
                "call_index": request.call_index,
            },
            "response": {
                "text": response.text,
                "prompt_tokens": response.prompt_tokens,
                "completion_tokens": response.completion_tokens,
                "backend_id": response.backend_id,
            },
        }
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        return response


class ReplayGateway:
    """Serves recorded responses; same-fingerprint repeats replay in order."""

    def __init__(self, cassette_path: str | Path):
        self._queues: dict[str, deque[ChatResponse]] = {}
        self._lock = threading.Lock()
        path = Path(cassette_path)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    fingerprint = row["fingerprint"]
                    resp = row["response"]
                    response = ChatResponse(
                        text=resp["text"],
                        prompt_tokens=int(resp["prompt_tokens"]),
                        completion_tokens=int(resp["completion_tokens"]),
                        backend_id=str(resp.get("backend_id", "replay")),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise GatewayError(f"{path}:{lineno}: bad cassette row: {exc}") from exc
                self._queues.setdefault(fingerprint, deque()).append(response)

    def chat(self, request: ChatRequest) -> ChatResponse:
        fingerprint = request_fingerprint(request)
        with self._lock:
            queue = self._queues.get(fingerprint)
            if not queue:
                raise GatewayError(
                    "no recorded response for request "
                    f"(role={request.role.kind.value}, problem={request.problem_id!r}, "
                    f"step={request.step_index}, call={request.call_index})"
                )
            return queue.popleft()
