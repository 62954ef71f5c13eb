"""Wire protocol: one JSON object per line, versioned.

Request:  {"v": 1, "kind": "exec", "id": "<string>", "script": "<source>",
           "timeout": <seconds>}
Response: {"v": 1, "id": "<id or null>", "ok": <bool>,
           "result_text": <string or null>, "stdout": "<captured stdout>",
           "error": <string or null>}

Every request line — including malformed ones — produces exactly one response
line. ``ok`` is true iff ``result_text`` is present and ``error`` is absent.
``id`` echoes the request id; it is null only when the request was too broken
to carry one. Ids must be unique within a worker session.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_SECONDS = 10.0


@dataclass(frozen=True)
class ExecOutcome:
    """What running one script produced."""

    ok: bool
    result_text: str | None
    stdout: str
    error: str | None

    def __post_init__(self) -> None:
        if self.ok != (self.result_text is not None and self.error is None):
            raise ValueError("ok must mean: result present and no error")


def response(request_id: str | None, outcome: ExecOutcome) -> dict[str, Any]:
    return {
        "v": PROTOCOL_VERSION,
        "id": request_id,
        "ok": outcome.ok,
        "result_text": outcome.result_text,
        "stdout": outcome.stdout,
        "error": outcome.error,
    }


def error_response(request_id: str | None, message: str) -> dict[str, Any]:
    return response(request_id, ExecOutcome(False, None, "", message))
