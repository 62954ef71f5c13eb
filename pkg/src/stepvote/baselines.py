"""One-shot baselines: single-tool solving and majority voting.

Single-tool solving issues one deterministic model call per problem
(temperature 0.0). The code variant executes the returned script and takes
the rendered ``result`` as the answer; the symbolic variant runs the returned
query, then issues a second model call that converts the raw tool output into
a boxed LaTeX answer.

Majority voting samples k full solutions at the executor sampling settings,
splitting k evenly across the tool mix in blocks (mix order, not
interleaved). The answer is the modal estimate class; ties break toward the
class containing the cheapest sample. Token-matched voting is the same
machine with per-mix sample-count presets sized to spend roughly what the
step-wise method spends.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import prompts
from .answers import AnswerForm, EquivalenceGrouper, extract_boxed, parse_answer
from .gateway import ChatRequest, ChatResponse, Gateway, RoleKind, RoleTag
from .tools import ToolClients, extract_fenced, run_code_tool, run_symbolic_tool
from .types import (
    CallRecord,
    MethodKind,
    MethodSpec,
    Problem,
    RunConfig,
    Sampling,
    ToolKind,
    UsageLedger,
    merge_ledgers,
)

# Sample counts that match the step-wise method's token spend, per tool mix.
# These are calibration presets, not derived quantities.
TOKEN_MATCHED_SAMPLES: dict[tuple[str, ...], int] = {
    ("cot",): 19,
    ("code",): 35,
    ("symbolic",): 70,
    ("cot", "code", "symbolic"): 33,
}

DEFAULT_MV_SAMPLES = 12

_DETERMINISTIC = Sampling(temperature=0.0, top_p=1.0)


@dataclass(frozen=True)
class SampleOutcome:
    """One sampled end-to-end solution."""

    index: int  # 1-based sample number within the run
    tool: ToolKind
    text: str  # raw model solution text
    estimate: AnswerForm | None
    calls: tuple[CallRecord, ...]
    ledger: UsageLedger
    tool_error: bool = False


@dataclass(frozen=True)
class BaselineResult:
    answer: AnswerForm | None
    samples: tuple[SampleOutcome, ...]
    ledger: UsageLedger


def _solver_request(
    problem: Problem,
    tool: ToolKind,
    sampling: Sampling,
    config: RunConfig,
    sample_index: int,
) -> ChatRequest:
    return ChatRequest(
        system=prompts.EMPTY_SYSTEM,
        user=prompts.solver_user(tool, problem.statement),
        temperature=sampling.temperature,
        top_p=sampling.top_p,
        max_output_tokens=config.max_output_tokens,
        role=RoleTag(RoleKind.BASELINE, tool.value),
        problem_id=problem.id,
        step_index=0,
        call_index=sample_index,
    )


def _sample_once(
    problem: Problem,
    tool: ToolKind,
    sampling: Sampling,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
    sample_index: int,
) -> SampleOutcome:
    """One end-to-end solution with the given tool."""
    request = _solver_request(problem, tool, sampling, config, sample_index)
    response = gateway.chat(request)
    calls = [CallRecord("baseline", tool.value, response.prompt_tokens, response.completion_tokens)]
    estimate: AnswerForm | None = None
    tool_error = False

    if tool is ToolKind.COT:
        boxed = extract_boxed(response.text)
        estimate = parse_answer(boxed) if boxed is not None else None
    elif tool is ToolKind.CODE:
        script = extract_fenced(response.text, "python")
        if script is not None:
            result = run_code_tool(script, tools.code, tools.code_timeout)
            if result.ok:
                estimate = parse_answer(result.output)
            else:
                tool_error = True
    else:
        query = extract_fenced(response.text, "wolfram")
        if query is not None:
            result = run_symbolic_tool(query, tools.symbolic)
            if result.ok:
                # second call: turn raw tool output into a boxed LaTeX answer
                reformat = ChatRequest(
                    system=prompts.EMPTY_SYSTEM,
                    user=prompts.reformat_user(result.output),
                    temperature=_DETERMINISTIC.temperature,
                    top_p=_DETERMINISTIC.top_p,
                    max_output_tokens=config.max_output_tokens,
                    role=RoleTag(RoleKind.REFORMAT, tool.value),
                    problem_id=problem.id,
                    step_index=0,
                    call_index=sample_index,
                    history=(
                        ("user", request.user),
                        ("assistant", response.text),
                    ),
                )
                rresp = gateway.chat(reformat)
                calls.append(
                    CallRecord(
                        "reformat", tool.value, rresp.prompt_tokens, rresp.completion_tokens
                    )
                )
                boxed = extract_boxed(rresp.text)
                estimate = parse_answer(boxed) if boxed is not None else None
            else:
                tool_error = True

    return SampleOutcome(
        index=sample_index,
        tool=tool,
        text=response.text,
        estimate=estimate,
        calls=tuple(calls),
        ledger=merge_ledgers(*(c.ledger() for c in calls)),
        tool_error=tool_error,
    )


def single_tool_solve(
    problem: Problem,
    tool: ToolKind,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
) -> BaselineResult:
    """One deterministic solution; its estimate is the answer."""
    sample = _sample_once(problem, tool, _DETERMINISTIC, config, gateway, tools, sample_index=1)
    return BaselineResult(answer=sample.estimate, samples=(sample,), ledger=sample.ledger)


def _modal_answer(samples: tuple[SampleOutcome, ...]) -> AnswerForm | None:
    """Modal estimate class; ties break toward the class with the cheapest
    sample (then earliest)."""
    grouper = EquivalenceGrouper()
    class_members: dict[int, list[SampleOutcome]] = {}
    for sample in samples:
        if sample.estimate is None:
            continue
        cls = grouper.add(sample.estimate)
        class_members.setdefault(cls, []).append(sample)
    if not class_members:
        return None
    counts = grouper.counts

    def rank(cls: int) -> tuple[int, int, int]:
        cheapest_cost, cheapest_index = min(
            (s.ledger.cost_quarter_units, s.index) for s in class_members[cls]
        )
        return (-counts[cls], cheapest_cost, cheapest_index)

    best = min(range(len(counts)), key=rank)
    return grouper.representatives[best]


def vote_solve(
    problem: Problem,
    mix: tuple[ToolKind, ...],
    samples_total: int,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
) -> BaselineResult:
    """maj@k: sample k solutions split evenly across the mix, then vote."""
    if samples_total % len(mix) != 0:
        raise ValueError(f"{samples_total} samples do not split evenly over {len(mix)} tools")
    per_tool = samples_total // len(mix)
    samples: list[SampleOutcome] = []
    index = 0
    for tool in mix:
        for _ in range(per_tool):
            index += 1
            samples.append(
                _sample_once(
                    problem, tool, config.executor_sampling, config, gateway, tools, index
                )
            )
    answer = _modal_answer(tuple(samples))
    return BaselineResult(
        answer=answer,
        samples=tuple(samples),
        ledger=merge_ledgers(*(s.ledger for s in samples)),
    )


def token_matched_samples(mix: tuple[ToolKind, ...]) -> int:
    key = tuple(t.value for t in mix)
    preset = TOKEN_MATCHED_SAMPLES.get(key)
    if preset is None:
        raise ValueError(f"no token-matched preset for mix {key}; pass an explicit sample count")
    return preset


def solve_with_method(
    problem: Problem,
    method: MethodSpec,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
) -> BaselineResult:
    """Dispatch a baseline method spec. Step-wise solving lives in engine.solve."""
    if method.kind is MethodKind.SINGLE_TOOL:
        assert method.tool is not None
        return single_tool_solve(problem, method.tool, config, gateway, tools)
    if method.kind is MethodKind.MAJORITY_VOTE:
        return vote_solve(problem, method.tool_mix, method.samples, config, gateway, tools)
    if method.kind is MethodKind.TOKEN_MATCHED_MV:
        return vote_solve(problem, method.tool_mix, method.samples, config, gateway, tools)
    raise ValueError(f"not a baseline method: {method.kind}")
