"""Unit tests for core value types, usage accounting, and configuration."""
from __future__ import annotations

from fractions import Fraction

import pytest

from stepvote.answers import parse_answer
from stepvote.types import (
    CallRecord,
    Completion,
    MethodKind,
    MethodSpec,
    Problem,
    RunConfig,
    Sampling,
    SelectionMode,
    SelectionOutcome,
    StepCandidate,
    StepRecord,
    ToolKind,
    UsageLedger,
    candidate_to_dict,
    completion_to_dict,
    ledger_cost,
    ledger_to_dict,
    merge_ledgers,
)


class TestUsageLedger:
    def test_cost_in_quarter_units(self) -> None:
        ledger = UsageLedger(prompt_tokens=10, output_tokens=3, calls=1)
        assert ledger.cost_quarter_units == 10 + 4 * 3

    def test_ledger_cost_is_exact(self) -> None:
        ledger = UsageLedger(prompt_tokens=3, output_tokens=7, calls=1)
        assert ledger_cost(ledger) == Fraction(3, 4) + 7

    def test_quarter_units_match_fraction_cost_for_any_merge(self) -> None:
        parts = [UsageLedger(p, o, 1) for p, o in ((1, 0), (2, 3), (1001, 17), (3, 0))]
        merged = merge_ledgers(*parts)
        total = sum((ledger_cost(l) for l in parts), Fraction(0))
        assert Fraction(merged.cost_quarter_units, 4) == total

    def test_merge_sums_fields(self) -> None:
        merged = merge_ledgers(UsageLedger(1, 2, 3), UsageLedger(10, 20, 30))
        assert merged == UsageLedger(11, 22, 33)

    def test_merge_of_nothing_is_zero(self) -> None:
        assert merge_ledgers() == UsageLedger()

    def test_negative_counts_rejected(self) -> None:
        with pytest.raises(ValueError):
            UsageLedger(prompt_tokens=-1)

    def test_call_record_ledger_counts_one_call(self) -> None:
        record = CallRecord("executor", "cot", 100, 50)
        assert record.ledger() == UsageLedger(100, 50, calls=1)


class TestProblem:
    def test_requires_id_and_statement(self) -> None:
        with pytest.raises(ValueError):
            Problem(id="", statement="x")
        with pytest.raises(ValueError):
            Problem(id="p", statement="")

    def test_level_range(self) -> None:
        with pytest.raises(ValueError):
            Problem(id="p", statement="x", level=6)


class TestSampling:
    def test_bounds(self) -> None:
        with pytest.raises(ValueError):
            Sampling(temperature=-0.1, top_p=1.0)
        with pytest.raises(ValueError):
            Sampling(temperature=0.5, top_p=0.0)


class TestStepCandidate:
    def test_one_based_index(self) -> None:
        with pytest.raises(ValueError):
            StepCandidate(0, ToolKind.COT, content="x")

    def test_reasoning_candidate_cannot_fail_a_tool(self) -> None:
        with pytest.raises(ValueError):
            StepCandidate(1, ToolKind.COT, content="x", tool_error=True)

    def test_inline_answer_allows_empty_content(self) -> None:
        candidate = StepCandidate(1, ToolKind.COT, content="", inline_final_answer="1")
        assert candidate.inline_final_answer == "1"


class TestStepRecord:
    def _selection(self, index: int, n: int) -> SelectionOutcome:
        return SelectionOutcome(
            index=index,
            mode=SelectionMode.FULL,
            effective_mode=SelectionMode.FULL,
            shortlist=tuple(range(n)),
        )

    def _candidate(self, k: int) -> StepCandidate:
        return StepCandidate(k, ToolKind.COT, content=f"step {k}")

    def _completion(self) -> Completion:
        return Completion("done", 1, parse_answer("1"))

    def test_parallel_lengths_enforced(self) -> None:
        with pytest.raises(ValueError):
            StepRecord(
                step_index=0,
                candidates=(self._candidate(1),),
                completions=(self._completion(), self._completion()),
                gaps=(1,),
                selection=self._selection(0, 1),
                calls=(),
                ledger=UsageLedger(),
            )

    def test_selected_accessors(self) -> None:
        record = StepRecord(
            step_index=0,
            candidates=(self._candidate(1), self._candidate(2)),
            completions=(self._completion(), self._completion()),
            gaps=(0, 1),
            selection=self._selection(1, 2),
            calls=(),
            ledger=UsageLedger(),
        )
        assert record.selected.executor_index == 2
        assert record.selected_completion is record.completions[1]


class TestSelectionOutcome:
    def test_modal_modes_must_select_from_shortlist(self) -> None:
        with pytest.raises(ValueError):
            SelectionOutcome(
                index=2,
                mode=SelectionMode.FULL,
                effective_mode=SelectionMode.FULL,
                shortlist=(0, 1),
            )

    def test_random_mode_is_not_bound_to_shortlist(self) -> None:
        outcome = SelectionOutcome(
            index=2,
            mode=SelectionMode.RANDOM,
            effective_mode=SelectionMode.RANDOM,
            shortlist=(0, 1, 2),
        )
        assert outcome.index == 2


class TestMethodSpec:
    def test_single_tool_needs_tool(self) -> None:
        with pytest.raises(ValueError):
            MethodSpec(MethodKind.SINGLE_TOOL)

    def test_voting_needs_even_split(self) -> None:
        with pytest.raises(ValueError):
            MethodSpec(
                MethodKind.MAJORITY_VOTE,
                tool_mix=(ToolKind.COT, ToolKind.CODE),
                samples=5,
            )

    def test_voting_ok(self) -> None:
        spec = MethodSpec(
            MethodKind.MAJORITY_VOTE,
            tool_mix=(ToolKind.COT, ToolKind.CODE, ToolKind.SYMBOLIC),
            samples=12,
        )
        assert spec.samples == 12


class TestRunConfig:
    def test_defaults(self) -> None:
        config = RunConfig()
        assert config.max_executors == 12
        assert config.consistency_threshold == 2
        assert config.step_cap == 12
        assert config.max_output_tokens == 2048
        assert config.executor_sampling == Sampling(0.7, 0.9)
        assert config.completer_sampling == Sampling(0.0, 1.0)
        assert config.tool_order == (ToolKind.COT, ToolKind.CODE, ToolKind.SYMBOLIC)

    def test_round_trips_through_dict(self) -> None:
        config = RunConfig(
            max_executors=6,
            consistency_threshold=0,
            selection_mode=SelectionMode.ANSWER_ONLY,
            selection_seed=7,
        )
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_unknown_fields_rejected(self) -> None:
        with pytest.raises(ValueError, match="unknown run-config fields"):
            RunConfig.from_dict({"max_executors": 3, "mystery": 1})

    def test_validation(self) -> None:
        with pytest.raises(ValueError):
            RunConfig(max_executors=0)
        with pytest.raises(ValueError):
            RunConfig(consistency_threshold=-1)
        with pytest.raises(ValueError):
            RunConfig(tool_order=())


class TestSerialization:
    def test_ledger_dict_fields(self) -> None:
        data = ledger_to_dict(UsageLedger(5, 2, 1))
        assert data == {
            "prompt_tokens": 5,
            "output_tokens": 2,
            "calls": 1,
            "cost_quarter_units": 13,
        }

    def test_candidate_dict_fields(self) -> None:
        candidate = StepCandidate(
            2,
            ToolKind.CODE,
            content="text",
            tool_payload="result = 1",
            tool_output="1",
        )
        data = candidate_to_dict(candidate)
        assert set(data) == {
            "executor_index",
            "tool",
            "content",
            "tool_payload",
            "tool_output",
            "tool_error",
            "inline_final_answer",
        }
        assert data["executor_index"] == 2
        assert data["tool"] == "code"

    def test_completion_dict_carries_estimate(self) -> None:
        completion = Completion("text", 3, parse_answer(r"\frac{1}{2}"))
        data = completion_to_dict(completion)
        assert data["token_count"] == 3
        assert data["estimate"]["canonical"] == "1/2"
