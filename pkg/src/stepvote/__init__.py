"""Step-wise multi-tool math solver with answer-vote early stopping."""

from .answers import AnswerForm, FormKind, equivalent, extract_boxed, grade, parse_answer
from .engine import consistency_gap, select_candidate, solve
from .gateway import ChatRequest, ChatResponse, HttpGateway, MockGateway
from .types import (
    Completion,
    MethodKind,
    MethodSpec,
    Problem,
    RunConfig,
    SelectionMode,
    SolutionTrace,
    StepCandidate,
    StepRecord,
    Termination,
    ToolKind,
    UsageLedger,
    ledger_cost,
)

__version__ = "0.1.0"
