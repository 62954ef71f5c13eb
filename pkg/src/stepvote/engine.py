"""Step-by-step solver.

For each step, up to ``max_executors`` tool-assigned executors are invoked
strictly in sequence. Every candidate step is finished by a deterministic
completer call, and the boxed answer of that completion becomes the
candidate's final-answer estimate. Estimates are grouped into equivalence
classes as they arrive; once the vote gap (top class count minus runner-up
count) strictly exceeds the consistency threshold, no further executors run
for that step.

Selection is two-stage: shortlist the candidates in the modal estimate class,
then keep the one with the shortest completion (ties toward the earliest
candidate). Ablation modes replace either stage:

* answer-only: shortlist as usual, then pick uniformly at random;
* length-only: shortlist everyone, keep the shortest;
* random: pick uniformly at random from all candidates.

When no candidate of a step produced an estimate, the first stage has nothing
to vote on: full degrades to length-only and answer-only to random for that
step, and the step is flagged.

Randomized modes draw from a ``random.Random`` seeded per problem from
(selection_seed, problem id), and consume exactly one ``rng.randrange(n)``
per selection, which is what makes runs reproducible and oracle-testable.
"""
from __future__ import annotations

import hashlib
import random
from typing import Sequence

from .answers import EquivalenceGrouper, extract_boxed, parse_answer
from .gateway import ChatRequest, Gateway, RoleKind, RoleTag
from .prompts import completer_system, completer_user
from .tools import ToolClients, invoke_executor, render_progress
from .types import (
    CallRecord,
    Completion,
    Problem,
    RunConfig,
    SelectionMode,
    SelectionOutcome,
    SolutionTrace,
    StepCandidate,
    StepRecord,
    Termination,
    UsageLedger,
    merge_ledgers,
)


class StepState:
    """Accumulates candidates, completions, and estimate classes for one step."""

    def __init__(self) -> None:
        self.candidates: list[StepCandidate] = []
        self.completions: list[Completion] = []
        self.class_of: list[int | None] = []  # estimate class per candidate
        self._grouper = EquivalenceGrouper()

    def add(self, candidate: StepCandidate, completion: Completion) -> None:
        self.candidates.append(candidate)
        self.completions.append(completion)
        if completion.estimate is None:
            self.class_of.append(None)
        else:
            self.class_of.append(self._grouper.add(completion.estimate))

    def class_counts(self) -> tuple[int, ...]:
        return self._grouper.counts

    def histogram(self):
        return self._grouper.histogram()

    def __len__(self) -> int:
        return len(self.candidates)


def consistency_gap(counts) -> int:
    """Top estimate-class frequency minus the runner-up frequency.

    Accepts a histogram mapping or an iterable of counts. Fewer than two
    classes means the runner-up frequency is zero.
    """
    values = counts.values() if hasattr(counts, "values") else counts
    ordered = sorted(values, reverse=True)
    first = ordered[0] if ordered else 0
    second = ordered[1] if len(ordered) > 1 else 0
    return first - second


def select_candidate(
    state: StepState,
    mode: SelectionMode,
    rng: random.Random | None = None,
) -> SelectionOutcome:
    """Pick one candidate index from the step state; see module docstring."""
    n = len(state)
    if n == 0:
        raise ValueError("cannot select from an empty step")
    all_estimates_failed = all(c is None for c in state.class_of)
    effective = mode
    if all_estimates_failed:
        if mode is SelectionMode.FULL:
            effective = SelectionMode.LENGTH_ONLY
        elif mode is SelectionMode.ANSWER_ONLY:
            effective = SelectionMode.RANDOM

    if effective in (SelectionMode.FULL, SelectionMode.ANSWER_ONLY):
        counts = state.class_counts()
        best = max(counts)
        modal_class = counts.index(best)  # earliest class wins ties
        shortlist = tuple(i for i in range(n) if state.class_of[i] == modal_class)
    else:
        shortlist = tuple(range(n))

    if effective is SelectionMode.FULL or effective is SelectionMode.LENGTH_ONLY:
        index = min(shortlist, key=lambda i: (state.completions[i].token_count, i))
    else:
        if rng is None:
            raise ValueError(f"selection mode {effective.value} needs an rng")
        index = shortlist[rng.randrange(len(shortlist))]

    return SelectionOutcome(
        index=index,
        mode=mode,
        effective_mode=effective,
        shortlist=shortlist,
        all_estimates_failed=all_estimates_failed,
    )


def run_step(
    problem: Problem,
    partial: Sequence[str],
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
    *,
    step_index: int,
    rng: random.Random,
) -> StepRecord:
    """Produce candidates for one step until the gap clears the threshold,
    then select one."""
    state = StepState()
    calls: list[CallRecord] = []
    gaps: list[int] = []
    progress = render_progress(partial)

    for k in range(1, config.max_executors + 1):
        candidate, response = invoke_executor(
            k, problem, progress, config, gateway, tools, step_index=step_index
        )
        calls.append(
            CallRecord(
                "executor", candidate.tool.value, response.prompt_tokens, response.completion_tokens
            )
        )

        if candidate.inline_final_answer is not None:
            # the executor already finished the solution; its boxed answer is
            # the estimate and there is nothing left to complete
            completion = Completion(
                text="", token_count=0, estimate=parse_answer(candidate.inline_final_answer)
            )
        else:
            creq = ChatRequest(
                system=completer_system(),
                user=completer_user(
                    problem.statement, render_progress([*partial, candidate.content])
                ),
                temperature=config.completer_sampling.temperature,
                top_p=config.completer_sampling.top_p,
                max_output_tokens=config.max_output_tokens,
                role=RoleTag(RoleKind.COMPLETER),
                problem_id=problem.id,
                step_index=step_index,
                call_index=k,
            )
            cresp = gateway.chat(creq)
            calls.append(
                CallRecord("completer", None, cresp.prompt_tokens, cresp.completion_tokens)
            )
            boxed = extract_boxed(cresp.text)
            estimate = parse_answer(boxed) if boxed is not None else None
            completion = Completion(cresp.text, cresp.completion_tokens, estimate)

        state.add(candidate, completion)
        gap = consistency_gap(state.class_counts())
        gaps.append(gap)
        if gap > config.consistency_threshold:
            break

    selection = select_candidate(state, config.selection_mode, rng)
    return StepRecord(
        step_index=step_index,
        candidates=tuple(state.candidates),
        completions=tuple(state.completions),
        gaps=tuple(gaps),
        selection=selection,
        calls=tuple(calls),
        ledger=merge_ledgers(*(c.ledger() for c in calls)),
    )


def _problem_rng(seed: int, problem_id: str) -> random.Random:
    # salted-hash independence from process hash randomization
    digest = hashlib.sha256(f"{seed}:{problem_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def solve(
    problem: Problem,
    config: RunConfig,
    gateway: Gateway,
    tools: ToolClients,
) -> SolutionTrace:
    """Solve one problem: run steps until a selected candidate carries a final
    answer, or the step cap is exhausted."""
    rng = _problem_rng(config.selection_seed, problem.id)
    partial: list[str] = []
    records: list[StepRecord] = []
    final = None
    terminated = Termination.STEP_CAP_EXCEEDED

    for step_index in range(config.step_cap):
        record = run_step(
            problem, partial, config, gateway, tools, step_index=step_index, rng=rng
        )
        records.append(record)
        chosen = record.selected
        if chosen.inline_final_answer is not None:
            final = record.selected_completion.estimate
            terminated = Termination.FINAL_ANSWER
            break
        partial.append(chosen.content)

    return SolutionTrace(
        problem_id=problem.id,
        steps=tuple(records),
        final_answer=final,
        terminated_by=terminated,
        ledger=merge_ledgers(*(r.ledger for r in records)),
    )
