"""Runs one script in a fresh child interpreter and reports its `result`.

The child blocks network access (socket constructors raise), redirects file
descriptor 1 to a capture file so the script's prints can't collide with the
protocol stream, executes the script in a clean namespace, and emits a single
JSON line with the outcome on the real stdout. The parent enforces the
timeout by killing the child, so hangs and crashes stay contained in the
child: this module never raises for script behavior.
"""
from __future__ import annotations

import json
import subprocess
import sys

from .protocol import ExecOutcome

TRUNCATE_AT = 10_000
TRUNCATION_MARKER = "...[truncated]"

# Source of the child program. The script is delivered over the child's
# stdin, so it never hits argv limits or quoting issues.
CHILD_SOURCE = r"""
import json, os, socket, sys, tempfile, traceback

class _BlockedSocket(socket.socket):
    def __init__(self, *args, **kwargs):
        raise OSError("network access is disabled")

def _blocked(*args, **kwargs):
    raise OSError("network access is disabled")

socket.socket = _BlockedSocket
socket.create_connection = _blocked
socket.socketpair = _blocked

TRUNCATE_AT = 10_000
TRUNCATION_MARKER = "...[truncated]"

def clip(text):
    if len(text) > TRUNCATE_AT:
        return text[:TRUNCATE_AT] + TRUNCATION_MARKER
    return text

script = sys.stdin.read()

sys.stdout.flush()
real_stdout = os.dup(1)
capture = tempfile.TemporaryFile()
os.dup2(capture.fileno(), 1)

namespace = {"__name__": "__main__"}
ok = True
error = None
try:
    exec(compile(script, "<script>", "exec"), namespace)
except BaseException:
    ok = False
    error = clip(traceback.format_exc(limit=20))
finally:
    sys.stdout.flush()
    os.dup2(real_stdout, 1)

capture.seek(0)
stdout_text = capture.read(TRUNCATE_AT + 1).decode("utf-8", errors="replace")
capture.close()
stdout_text = clip(stdout_text)

result_text = None
if ok:
    if "result" in namespace:
        result_text = clip(repr(namespace["result"]))
    else:
        ok = False
        error = "result not assigned"

os.write(
    real_stdout,
    (json.dumps({"ok": ok, "result_text": result_text, "stdout": stdout_text,
                 "error": error}) + "\n").encode("utf-8"),
)
"""


def execute(script: str, timeout: float) -> ExecOutcome:
    """Run the script in a fresh child process; never raises for script behavior."""
    try:
        proc = subprocess.run(
            [sys.executable, "-u", "-c", CHILD_SOURCE],
            input=script.encode("utf-8"),
            capture_output=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired:
        return ExecOutcome(False, None, "", f"timed out after {timeout:g}s")
    except OSError as exc:
        return ExecOutcome(False, None, "", f"could not start script process: {exc}")

    lines = proc.stdout.decode("utf-8", errors="replace").strip().splitlines()
    payload_line = lines[-1] if lines else ""
    try:
        payload = json.loads(payload_line)
        ok = bool(payload["ok"])
        result_text = payload["result_text"]
        stdout_text = str(payload["stdout"])
        error = payload["error"]
    except (json.JSONDecodeError, KeyError, TypeError):
        # the child died before reporting (os._exit, segfault, interpreter kill)
        return ExecOutcome(
            False, None, "", f"script process died without reporting (exit {proc.returncode})"
        )
    return ExecOutcome(
        ok=ok,
        result_text=str(result_text) if result_text is not None else None,
        stdout=stdout_text,
        error=str(error) if error is not None else None,
    )
