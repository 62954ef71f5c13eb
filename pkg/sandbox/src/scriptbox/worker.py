"""The worker loop: read request lines, answer each with exactly one response.

Validation failures, duplicate ids, unknown kinds, and even internal errors
all turn into error responses — the loop itself never dies on a request. The
worker exits when stdin closes.
"""
from __future__ import annotations

import json
import sys
from typing import Any, TextIO

from . import runner
from .protocol import (
    DEFAULT_TIMEOUT_SECONDS,
    PROTOCOL_VERSION,
    error_response,
    response,
)


def handle_line(line: str, seen_ids: set[str]) -> dict[str, Any]:
    """One response record for one request line."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        return error_response(None, f"malformed request: {exc}")
    if not isinstance(record, dict):
        return error_response(None, "malformed request: expected an object")

    raw_id = record.get("id")
    request_id = raw_id if isinstance(raw_id, str) and raw_id else None
    if request_id is None:
        return error_response(None, "missing or invalid id")
    if record.get("v") != PROTOCOL_VERSION:
        return error_response(request_id, f"unsupported protocol version {record.get('v')!r}")
    if record.get("kind") != "exec":
        return error_response(request_id, f"unknown kind {record.get('kind')!r}")
    if request_id in seen_ids:
        return error_response(request_id, f"duplicate id {request_id!r}")
    seen_ids.add(request_id)

    script = record.get("script")
    if not isinstance(script, str) or not script.strip():
        return error_response(request_id, "missing or empty script")
    timeout = record.get("timeout", DEFAULT_TIMEOUT_SECONDS)
    if not isinstance(timeout, (int, float)) or isinstance(timeout, bool) or timeout <= 0:
        return error_response(request_id, "timeout must be a number > 0")

    try:
        outcome = runner.execute(script, float(timeout))
    except Exception as exc:  # totality: even internal bugs produce a response
        return error_response(request_id, f"internal error: {type(exc).__name__}: {exc}")
    return response(request_id, outcome)


def serve(stdin: TextIO | None = None, stdout: TextIO | None = None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    seen_ids: set[str] = set()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        record = handle_line(line, seen_ids)
        stdout.write(json.dumps(record) + "\n")
        stdout.flush()


def main() -> int:
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
