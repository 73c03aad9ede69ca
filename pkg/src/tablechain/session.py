"""One table, one conversation: the shared ask/run pipeline.

Both the HTTP service and the REPL route through AnalysisSession so a raw
chain and the identical chain arriving over HTTP produce identical results.
Natural-language queries go plan → correct → validate → execute; raw chain
text goes parse → correct → validate → execute. The session table never
mutates; commands that change data return a new table in the Answer and the
caller decides what to do with it (the service registers a new version id).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .commands import CommandChain, DeleteWhere, InsertRow, Update
from .corrector import CorrectedChain, Correction, correct
from .errors import TableChainError
from .executor import ExecutionResult, execute
from .parser import parse_chain, serialize_chain
from .planner import (
    DEFAULT_VAGUENESS_THRESHOLD, ExemplarStore, MeasureRegistry, Plan,
    Rejection, default_registry, plan,
)
from .table import Table, with_meta
from .validator import Issue, validate


@dataclass(frozen=True)
class Answer:
    chain: CommandChain
    chain_text: str
    corrections: tuple[Correction, ...]
    result: ExecutionResult
    rationale: tuple[str, ...] = ()


@dataclass(frozen=True)
class Clarify:
    question: str
    candidates: tuple[str, ...]


AskOutcome = Union[Answer, Clarify]


class ChainInvalid(TableChainError):
    """A chain failed static validation; carries the issue list."""

    def __init__(self, issues: Sequence[Issue]):
        self.issues = tuple(issues)
        first = self.issues[0]
        super().__init__(f"{first.kind} at command {first.command_index}: {first.detail}")


def is_mutation(chain: CommandChain) -> bool:
    return any(isinstance(c, (Update, InsertRow, DeleteWhere)) for c in chain)


class AnalysisSession:
    def __init__(
        self,
        table: Table,
        *,
        registry: Optional[MeasureRegistry] = None,
        synonyms: Optional[Mapping[str, Sequence[str]]] = None,
        vagueness_threshold: float = DEFAULT_VAGUENESS_THRESHOLD,
    ):
        if synonyms:
            table = with_meta(table, synonyms)
        self.table = table
        self.registry = registry or default_registry()
        self.vagueness_threshold = vagueness_threshold
        self.exemplars = ExemplarStore()

    # -- pipelines ---------------------------------------------------------

    def ask(self, text: str) -> AskOutcome:
        outcome = plan(
            text, self.table.schema, self.registry, self.exemplars,
            self.vagueness_threshold,
        )
        if isinstance(outcome, Rejection):
            return Clarify(outcome.question, outcome.candidates)
        assert isinstance(outcome, Plan)
        answer = self._run(outcome.chain, rationale=outcome.rationale)
        self.exemplars.add(text, answer.chain)
        return answer

    def run_chain_text(self, text: str) -> Answer:
        return self._run(parse_chain(text))

    def run_chain(self, chain: CommandChain) -> Answer:
        return self._run(chain)

    def _run(
        self, chain: CommandChain, rationale: tuple[str, ...] = ()
    ) -> Answer:
        corrected: CorrectedChain = correct(chain, self.table.schema)
        report = validate(corrected.chain, self.table.schema)
        if not report.ok:
            raise ChainInvalid(report.issues)
        result: ExecutionResult = execute(corrected.chain, self.table)
        return Answer(
            chain=corrected.chain,
            chain_text=serialize_chain(corrected.chain),
            corrections=corrected.corrections,
            result=result,
            rationale=rationale,
        )
