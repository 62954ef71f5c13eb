r"""Prompt templates and their rendering rules.

Templates live as text fixtures under ``templates/``. Two render regimes:

* format templates hold ``{placeholder}`` slots and escape literal braces as
  ``{{}}``; they go through ``str.format``.
* the completion system prompt contains a literal ``\boxed{}`` with single
  braces and takes no placeholders; it is served verbatim and must never go
  through ``str.format`` (that would blow up on the empty braces).

The executor system prompts carry no placeholders but still use ``{{}}``
escapes, so they are formatted with no arguments to produce the final text.
"""
from __future__ import annotations

from functools import cache
from importlib import resources

from .types import ToolKind

TEMPLATE_NAMES = (
    "executor_system_cot.txt",
    "executor_system_code.txt",
    "executor_system_symbolic.txt",
    "executor_user.txt",
    "completer_system.txt",
    "completer_user.txt",
    "solver_user_cot.txt",
    "solver_user_code.txt",
    "solver_user_symbolic.txt",
    "reformat_user.txt",
)

_EXECUTOR_SYSTEM = {
    ToolKind.COT: "executor_system_cot.txt",
    ToolKind.CODE: "executor_system_code.txt",
    ToolKind.SYMBOLIC: "executor_system_symbolic.txt",
}

_SOLVER_USER = {
    ToolKind.COT: "solver_user_cot.txt",
    ToolKind.CODE: "solver_user_code.txt",
    ToolKind.SYMBOLIC: "solver_user_symbolic.txt",
}

# System prompt used for the one-shot baseline solvers: none. The baseline
# prompts are pure user messages.
EMPTY_SYSTEM = ""


@cache
def raw_template(name: str) -> str:
    """Template file contents with the single trailing newline stripped."""
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    text = (
        resources.files("stepvote").joinpath("templates", name).read_text(encoding="utf-8")
    )
    if text.endswith("\n"):
        text = text[:-1]
    return text


def executor_system(tool: ToolKind) -> str:
    return raw_template(_EXECUTOR_SYSTEM[tool]).format()


def executor_user(problem: str, progress: str) -> str:
    return raw_template("executor_user.txt").format(problem=problem, progress=progress)


def completer_system() -> str:
    return raw_template("completer_system.txt")


def completer_user(problem: str, progress: str) -> str:
    return raw_template("completer_user.txt").format(problem=problem, progress=progress)


def solver_user(tool: ToolKind, problem: str) -> str:
    return raw_template(_SOLVER_USER[tool]).format(problem=problem)


def reformat_user(output: str) -> str:
    return raw_template("reformat_user.txt").format(output=output)
