"""Core value types: problems, candidates, traces, usage accounting, run configuration.

Everything here is immutable. Token usage is tracked exactly: prompt tokens are
billed at a quarter of the output-token rate, so ledgers store cost in integer
quarter units and only convert to a Fraction at the edges.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Any, Mapping, Sequence


class ToolKind(enum.Enum):
    COT = "cot"
    CODE = "code"
    SYMBOLIC = "symbolic"


# Round-robin order used when assigning tools to executors.
DEFAULT_TOOL_ORDER: tuple[ToolKind, ...] = (
    ToolKind.COT,
    ToolKind.CODE,
    ToolKind.SYMBOLIC,
)


class Termination(enum.Enum):
    FINAL_ANSWER = "final_answer"
    STEP_CAP_EXCEEDED = "step_cap_exceeded"
    ALL_ESTIMATES_FAILED = "all_estimates_failed"


class SelectionMode(enum.Enum):
    FULL = "full"
    ANSWER_ONLY = "answer-only"
    LENGTH_ONLY = "length-only"
    RANDOM = "random"


class MethodKind(enum.Enum):
    MULTI_TOOL_STEPWISE = "multitag"
    SINGLE_TOOL = "single-tool"
    MAJORITY_VOTE = "mv"
    TOKEN_MATCHED_MV = "token-mv"


@dataclass(frozen=True)
class Problem:
    id: str
    statement: str
    answer: str | None = None  # ground-truth answer text, when known
    level: int | None = None
    subject: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.statement:
            raise ValueError("problem statement must be non-empty")
        if self.level is not None and not 1 <= self.level <= 5:
            raise ValueError(f"problem level must be in 1..5, got {self.level!r}")


@dataclass(frozen=True)
class Sampling:
    temperature: float
    top_p: float

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")


@dataclass(frozen=True)
class StepCandidate:
    executor_index: int  # 1-based position in the executor sequence for this step
    tool: ToolKind
    content: str  # annotated step text: prose plus any embedded tool payload/output
    tool_payload: str | None = None  # script or query extracted from the response
    tool_output: str | None = None  # what the tool returned (or its error text)
    tool_error: bool = False
    inline_final_answer: str | None = None  # boxed answer given directly by the executor

    def __post_init__(self) -> None:
        if self.executor_index < 1:
            raise ValueError("executor_index is 1-based and must be >= 1")
        if self.tool is ToolKind.COT and self.tool_error:
            raise ValueError("a reasoning-only candidate cannot carry a tool error")
        if not self.content and self.inline_final_answer is None:
            raise ValueError("candidate content must be non-empty")


@dataclass(frozen=True)
class Completion:
    text: str
    token_count: int  # length measure used by selection (completion tokens)
    estimate: "AnswerForm | None"  # parsed final-answer estimate, if one was found

    def __post_init__(self) -> None:
        if self.token_count < 0:
            raise ValueError("token_count must be >= 0")


@dataclass(frozen=True)
class UsageLedger:
    prompt_tokens: int = 0
    output_tokens: int = 0
    calls: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.output_tokens < 0 or self.calls < 0:
            raise ValueError("ledger counts must be >= 0")

    @property
    def cost_quarter_units(self) -> int:
        # prompt tokens cost 1/4 of an output token each; keep the total exact
        return self.prompt_tokens + 4 * self.output_tokens


def ledger_cost(ledger: UsageLedger) -> Fraction:
    """Exact cost in output-token units: prompt_tokens/4 + output_tokens."""
    return Fraction(ledger.prompt_tokens, 4) + ledger.output_tokens


def merge_ledgers(*ledgers: UsageLedger) -> UsageLedger:
    return UsageLedger(
        prompt_tokens=sum(l.prompt_tokens for l in ledgers),
        output_tokens=sum(l.output_tokens for l in ledgers),
        calls=sum(l.calls for l in ledgers),
    )


@dataclass(frozen=True)
class CallRecord:
    role: str  # "executor" | "completer" | "solver" | "reformat"
    tool: str | None
    prompt_tokens: int
    output_tokens: int

    def ledger(self) -> UsageLedger:
        return UsageLedger(self.prompt_tokens, self.output_tokens, calls=1)


@dataclass(frozen=True)
class SelectionOutcome:
    index: int  # 0-based position of the chosen candidate
    mode: SelectionMode  # mode requested by configuration
    effective_mode: SelectionMode  # mode actually applied (after any fallback)
    shortlist: tuple[int, ...]  # 0-based positions surviving the first stage
    all_estimates_failed: bool = False

    def __post_init__(self) -> None:
        if self.index not in self.shortlist and self.effective_mode in (
            SelectionMode.FULL,
            SelectionMode.ANSWER_ONLY,
        ):
            raise ValueError("selected index must come from the shortlist")


@dataclass(frozen=True)
class StepRecord:
    step_index: int  # 0-based
    candidates: tuple[StepCandidate, ...]
    completions: tuple[Completion, ...]
    gaps: tuple[int, ...]  # vote gap observed after each executor
    selection: SelectionOutcome
    calls: tuple[CallRecord, ...]
    ledger: UsageLedger

    def __post_init__(self) -> None:
        if len(self.candidates) != len(self.completions):
            raise ValueError("one completion per candidate")
        if len(self.gaps) != len(self.candidates):
            raise ValueError("one gap observation per candidate")
        if not 0 <= self.selection.index < len(self.candidates):
            raise ValueError("selection index out of range")

    @property
    def selected(self) -> StepCandidate:
        return self.candidates[self.selection.index]

    @property
    def selected_completion(self) -> Completion:
        return self.completions[self.selection.index]


@dataclass(frozen=True)
class SolutionTrace:
    problem_id: str
    steps: tuple[StepRecord, ...]
    final_answer: "AnswerForm | None"
    terminated_by: Termination
    ledger: UsageLedger

    def __post_init__(self) -> None:
        if self.terminated_by is Termination.FINAL_ANSWER and self.final_answer is None:
            raise ValueError("final-answer termination requires a final answer")


@dataclass(frozen=True)
class MethodSpec:
    kind: MethodKind
    tool: ToolKind | None = None  # single-tool baselines
    tool_mix: tuple[ToolKind, ...] = ()  # voting baselines
    samples: int = 0  # total sampled solutions for voting baselines

    def __post_init__(self) -> None:
        if self.kind is MethodKind.SINGLE_TOOL:
            if self.tool is None:
                raise ValueError("single-tool method needs a tool")
        elif self.kind in (MethodKind.MAJORITY_VOTE, MethodKind.TOKEN_MATCHED_MV):
            if not self.tool_mix:
                raise ValueError("voting method needs a tool mix")
            if self.samples < 1:
                raise ValueError("voting method needs samples >= 1")
            if self.samples % len(self.tool_mix) != 0:
                raise ValueError(
                    "samples must split evenly across the tool mix: "
                    f"{self.samples} over {len(self.tool_mix)} tools"
                )


DEFAULT_MAX_EXECUTORS = 12
DEFAULT_CONSISTENCY_THRESHOLD = 2
DEFAULT_STEP_CAP = 12
DEFAULT_MAX_OUTPUT_TOKENS = 2048
DEFAULT_EXECUTOR_SAMPLING = Sampling(temperature=0.7, top_p=0.9)
DEFAULT_COMPLETER_SAMPLING = Sampling(temperature=0.0, top_p=1.0)


@dataclass(frozen=True)
class RunConfig:
    max_executors: int = DEFAULT_MAX_EXECUTORS
    consistency_threshold: int = DEFAULT_CONSISTENCY_THRESHOLD
    step_cap: int = DEFAULT_STEP_CAP
    selection_mode: SelectionMode = SelectionMode.FULL
    executor_sampling: Sampling = DEFAULT_EXECUTOR_SAMPLING
    completer_sampling: Sampling = DEFAULT_COMPLETER_SAMPLING
    tool_order: tuple[ToolKind, ...] = DEFAULT_TOOL_ORDER
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    selection_seed: int = 0  # seeds the RNG used by randomized selection modes

    def __post_init__(self) -> None:
        if self.max_executors < 1:
            raise ValueError("max_executors must be >= 1")
        if self.consistency_threshold < 0:
            raise ValueError("consistency_threshold must be >= 0")
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")
        if not self.tool_order:
            raise ValueError("tool_order must be non-empty")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_executors": self.max_executors,
            "consistency_threshold": self.consistency_threshold,
            "step_cap": self.step_cap,
            "selection_mode": self.selection_mode.value,
            "executor_sampling": {
                "temperature": self.executor_sampling.temperature,
                "top_p": self.executor_sampling.top_p,
            },
            "completer_sampling": {
                "temperature": self.completer_sampling.temperature,
                "top_p": self.completer_sampling.top_p,
            },
            "tool_order": [t.value for t in self.tool_order],
            "max_output_tokens": self.max_output_tokens,
            "selection_seed": self.selection_seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown run-config fields: {sorted(unknown)}")
        kwargs: dict[str, Any] = dict(data)
        if "selection_mode" in kwargs:
            kwargs["selection_mode"] = SelectionMode(kwargs["selection_mode"])
        for key in ("executor_sampling", "completer_sampling"):
            if key in kwargs and isinstance(kwargs[key], Mapping):
                kwargs[key] = Sampling(**kwargs[key])
        if "tool_order" in kwargs:
            kwargs["tool_order"] = tuple(ToolKind(t) for t in kwargs["tool_order"])
        return cls(**kwargs)


# --- run-log serialization -------------------------------------------------
#
# Dict shapes here are the on-disk schema for run logs; field names are part
# of the interface and must stay stable.


def ledger_to_dict(ledger: UsageLedger) -> dict[str, Any]:
    return {
        "prompt_tokens": ledger.prompt_tokens,
        "output_tokens": ledger.output_tokens,
        "calls": ledger.calls,
        "cost_quarter_units": ledger.cost_quarter_units,
    }


def candidate_to_dict(c: StepCandidate) -> dict[str, Any]:
    return {
        "executor_index": c.executor_index,
        "tool": c.tool.value,
        "content": c.content,
        "tool_payload": c.tool_payload,
        "tool_output": c.tool_output,
        "tool_error": c.tool_error,
        "inline_final_answer": c.inline_final_answer,
    }


def completion_to_dict(c: Completion) -> dict[str, Any]:
    return {
        "text": c.text,
        "token_count": c.token_count,
        "estimate": c.estimate.to_dict() if c.estimate is not None else None,
    }


def step_to_dict(s: StepRecord) -> dict[str, Any]:
    return {
        "step_index": s.step_index,
        "candidates": [candidate_to_dict(c) for c in s.candidates],
        "completions": [completion_to_dict(c) for c in s.completions],
        "gaps": list(s.gaps),
        "selection": {
            "mode": s.selection.mode.value,
            "effective_mode": s.selection.effective_mode.value,
            "shortlist": list(s.selection.shortlist),
            "index": s.selection.index,
            "all_estimates_failed": s.selection.all_estimates_failed,
        },
        "calls": [
            {
                "role": c.role,
                "tool": c.tool,
                "prompt_tokens": c.prompt_tokens,
                "output_tokens": c.output_tokens,
            }
            for c in s.calls
        ],
        "ledger": ledger_to_dict(s.ledger),
    }


def trace_to_dict(t: SolutionTrace) -> dict[str, Any]:
    return {
        "problem_id": t.problem_id,
        "steps": [step_to_dict(s) for s in t.steps],
        "final_answer": t.final_answer.to_dict() if t.final_answer is not None else None,
        "terminated_by": t.terminated_by.value,
        "ledger": ledger_to_dict(t.ledger),
    }
