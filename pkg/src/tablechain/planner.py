"""Rule-based query planner: natural-language text in, command chain out.

A query either becomes a Plan (a validated CommandChain plus one rationale
line per step) or a Rejection (a clarifying question plus up to five
candidate column names). Rejection is the vague-query channel, not an
exception.

The pipeline: match slot patterns over the tokenized query, resolve column
mentions with the corrector rules, resolve measures through the derivation
registry (prepending DERIVE steps when a measure is computed rather than
stored), then reject when the vagueness score crosses the threshold or a
mandatory slot stays unresolved.

The Planner protocol at the bottom is the seam where a learned model could
replace RulePlanner; contract tests exercise both this implementation and a
mock through the same interface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

import numpy as np
import yaml

from .commands import (
    Agg, Binary, Col, CommandChain, Derive, Describe, Filter, GroupBy, Lit,
    Plot, Predict, Select, SliceTop, Sort,
)
from .corrector import resolve_column
from .errors import AmbiguousColumn
from .parser import parse_expr, serialize_expr
from .table import Schema, normalize_name
from .textvec import cosine, trigram_vector
from .validator import validate

EMBED_DIM = 256
DEFAULT_VAGUENESS_THRESHOLD = 0.8

_WORD_NUMBERS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
    "thirteen": 13, "fourteen": 14, "fifteen": 15, "sixteen": 16,
    "seventeen": 17, "eighteen": 18, "nineteen": 19, "twenty": 20,
}
_STOPWORDS = {
    "the", "a", "an", "of", "by", "with", "in", "for", "me", "us",
    "please", "to", "their", "its", "all",
}


# --- outcome types -------------------------------------------------------------

@dataclass(frozen=True)
class Plan:
    chain: CommandChain
    rationale: tuple[str, ...]


@dataclass(frozen=True)
class Rejection:
    question: str
    candidates: tuple[str, ...]

    def __post_init__(self):
        if not self.question:
            raise ValueError("a rejection needs a non-empty question")


PlanOutcome = Union[Plan, Rejection]


# --- measure registry ------------------------------------------------------------

@dataclass(frozen=True)
class MeasureDef:
    name: str
    roles: tuple[str, ...]
    expr_text: str


@dataclass(frozen=True)
class MeasureRegistry:
    entries: tuple[MeasureDef, ...] = ()

    def find(self, name: str) -> Optional[MeasureDef]:
        wanted = normalize_name(name)
        for entry in self.entries:
            if normalize_name(entry.name) == wanted:
                return entry
        return None


def default_registry() -> MeasureRegistry:
    return MeasureRegistry((
        MeasureDef(
            "profit_margin",
            ("box_office", "cost"),
            "(box_office - cost) / cost",
        ),
    ))


@dataclass(frozen=True)
class Direct:
    col: str


@dataclass(frozen=True)
class Derivation:
    derive: Derive


@dataclass(frozen=True)
class Unresolvable:
    missing: tuple[str, ...]


MeasureResolution = Union[Direct, Derivation, Unresolvable]


def _schema_info(schema: Schema) -> list[tuple[str, tuple[str, ...]]]:
    return [(c.name, c.synonyms) for c in schema.columns]


def resolve_measure(
    name: str, schema: Schema, registry: MeasureRegistry
) -> MeasureResolution:
    try:
        hit = resolve_column(name, _schema_info(schema))
    except AmbiguousColumn:
        return Unresolvable((name,))
    if hit is not None:
        return Direct(hit[0])
    entry = registry.find(name)
    if entry is None:
        return Unresolvable((name,))
    mapping: dict[str, str] = {}
    missing: list[str] = []
    for role in entry.roles:
        try:
            resolved = resolve_column(role, _schema_info(schema))
        except AmbiguousColumn:
            resolved = None
        if resolved is None:
            missing.append(role)
        else:
            mapping[role] = resolved[0]
    if missing:
        return Unresolvable(tuple(missing))
    template = parse_expr(entry.expr_text)

    def substitute(col_name: str) -> str:
        return mapping.get(col_name, col_name)

    from .commands import map_expr_columns

    expr = map_expr_columns(template, substitute)
    return Derivation(Derive(normalize_name(entry.name), expr))


# --- embeddings / exemplars -------------------------------------------------------

def embed_text(q: str) -> np.ndarray:
    return trigram_vector(q, EMBED_DIM)


@dataclass(frozen=True, eq=False)
class Exemplar:
    query: str
    chain: CommandChain
    embedding: np.ndarray


class ExemplarStore:
    """Append-only store of solved queries, searched by embedding cosine."""

    def __init__(self):
        self._items: list[Exemplar] = []

    def add(self, query: str, chain: CommandChain) -> Exemplar:
        ex = Exemplar(query, chain, embed_text(query))
        self._items.append(ex)
        return ex

    def __len__(self) -> int:
        return len(self._items)

    def items(self) -> tuple[Exemplar, ...]:
        return tuple(self._items)


def retrieve_exemplars(
    query: str, store: ExemplarStore, k: int
) -> list[tuple[Exemplar, float]]:
    if k < 1:
        raise ValueError("k must be at least 1")
    q = embed_text(query)
    scored = [(ex, cosine(q, ex.embedding)) for ex in store.items()]
    # stable sort: ties keep insertion order
    scored.sort(key=lambda pair: -pair[1])
    return scored[:k]


# --- tokenization helpers ----------------------------------------------------------

def _tokens(query: str) -> list[str]:
    return re.findall(r"[a-z0-9_.]+", query.lower())


def _as_number(tok: str) -> Optional[float]:
    if tok in _WORD_NUMBERS:
        return float(_WORD_NUMBERS[tok])
    try:
        return float(tok)
    except ValueError:
        return None


def _strip_stopwords(tokens: Sequence[str]) -> list[str]:
    return [t for t in tokens if t not in _STOPWORDS]


@dataclass
class _Ctx:
    schema: Schema
    registry: MeasureRegistry

    def resolve_col(self, text: str) -> Optional[str]:
        if not text:
            return None
        try:
            hit = resolve_column(text, _schema_info(self.schema))
        except AmbiguousColumn:
            return None
        return hit[0] if hit is not None else None

    def resolve_measure_text(
        self, tokens: Sequence[str]
    ) -> tuple[Optional[MeasureResolution], Optional[str]]:
        """Longest resolvable prefix of the token run; returns (hit, text)."""
        words = _strip_stopwords(tokens)
        for end in range(len(words), 0, -1):
            text = " ".join(words[:end])
            hit = resolve_measure(text, self.schema, self.registry)
            if not isinstance(hit, Unresolvable):
                return hit, text
        if words:
            return None, " ".join(words)
        return None, None


# --- pattern matches ---------------------------------------------------------------

@dataclass
class _Match:
    pattern: str
    filled: int
    total: int
    chain: Optional[CommandChain]
    rationale: tuple[str, ...]
    question: str
    unresolved_text: Optional[str] = None

    @property
    def fraction(self) -> float:
        return 1.0 if self.total == 0 else self.filled / self.total


_PRIORITY = ("top_k", "sort", "filter", "aggregate", "predict", "plot",
             "describe", "show")

_TOP_DESC = ("top", "highest", "largest", "biggest", "most", "greatest")
_TOP_ASC = ("bottom", "lowest", "smallest", "least", "fewest", "cheapest")


def _measure_steps(
    hit: MeasureResolution,
) -> tuple[list, str, list[str]]:
    """Chain prefix, resolved column name, and rationale for a measure."""
    if isinstance(hit, Direct):
        return [], hit.col, []
    assert isinstance(hit, Derivation)
    derive = hit.derive
    why = (
        f"`{derive.out_name}` is not a stored column; "
        f"computing it as {serialize_expr(derive.expr)}"
    )
    return [derive], derive.out_name, [why]


def _try_top_k(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    trigger = next(
        (i for i, t in enumerate(tokens) if t in _TOP_DESC + _TOP_ASC), None
    )
    if trigger is None:
        return None
    ascending = tokens[trigger] in _TOP_ASC
    limit: Optional[int] = None
    for t in tokens:
        n = _as_number(t)
        if n is not None and float(n).is_integer() and n >= 1:
            limit = int(n)
            break

    # Measure text: after the last ranking trigger; for plain "top N",
    # after the limit token.
    last_trigger = max(
        i for i, t in enumerate(tokens) if t in _TOP_DESC + _TOP_ASC
    )
    tail = tokens[last_trigger + 1:]
    if tail and _as_number(tail[0]) is not None:
        tail = tail[1:]
    hit, text = ctx.resolve_measure_text(tail)

    filled = int(limit is not None) + int(hit is not None)
    if hit is None:
        if text is None:
            question = (
                "Which column should I rank by, and how many rows do you want?"
            )
        else:
            question = f"Which column should I rank by? I couldn't match '{text}'."
        if limit is None and text is not None:
            question = (
                f"How many rows should I return, and which column is '{text}'?"
            )
        return _Match("top_k", filled, 2, None, (), question, text)
    if limit is None:
        return _Match(
            "top_k", filled, 2, None, (),
            "How many rows should I return?", None,
        )
    steps, col, rationale = _measure_steps(hit)
    direction = "ascending" if ascending else "descending"
    steps += [Sort(col, ascending), SliceTop(limit)]
    rationale += [
        f"ordering rows by `{col}` {direction}",
        f"keeping the first {limit} rows",
    ]
    return _Match("top_k", 2, 2, CommandChain(tuple(steps)), tuple(rationale), "")


def _try_sort(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    triggers = ("sort", "sorted", "order", "ordered", "rank", "ranked", "arrange")
    trigger = next((i for i, t in enumerate(tokens) if t in triggers), None)
    if trigger is None:
        return None
    descending_words = {"desc", "descending", "decreasing", "reverse"}
    ascending = not any(t in descending_words for t in tokens)
    tail = [
        t for t in tokens[trigger + 1:]
        if t not in descending_words and t not in ("asc", "ascending", "increasing")
    ]
    hit, text = ctx.resolve_measure_text(tail)
    if hit is None:
        question = "Which column should I sort by?"
        if text:
            question = f"Which column should I sort by? I couldn't match '{text}'."
        return _Match("sort", 0, 1, None, (), question, text)
    steps, col, rationale = _measure_steps(hit)
    direction = "ascending" if ascending else "descending"
    steps.append(Sort(col, ascending))
    rationale.append(f"ordering rows by `{col}` {direction}")
    return _Match("sort", 1, 1, CommandChain(tuple(steps)), tuple(rationale), "")


_OP_PHRASES: tuple[tuple[tuple[str, ...], str], ...] = (
    (("greater", "than"), ">"),
    (("more", "than"), ">"),
    (("less", "than"), "<"),
    (("fewer", "than"), "<"),
    (("at", "least"), ">="),
    (("at", "most"), "<="),
    (("equal", "to"), "="),
    (("over",), ">"),
    (("above",), ">"),
    (("exceeding",), ">"),
    (("exceeds",), ">"),
    (("under",), "<"),
    (("below",), "<"),
    (("equals",), "="),
)


def _try_filter(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    found = None
    for phrase, op in _OP_PHRASES:
        for i in range(len(tokens) - len(phrase) + 1):
            if tuple(tokens[i : i + len(phrase)]) == phrase:
                found = (i, i + len(phrase), op)
                break
        if found:
            break
    if found is None:
        return None
    start, end, op = found
    value: Optional[float] = None
    for t in tokens[end:]:
        value = _as_number(t)
        if value is not None:
            break
    noise = {
        "show", "filter", "keep", "find", "rows", "records", "only", "where",
        "whose", "that", "are", "is", "values", "value", "everything", "list",
    }
    col_tokens = [t for t in _strip_stopwords(tokens[:start]) if t not in noise]
    col = None
    for begin in range(len(col_tokens)):
        col = ctx.resolve_col(" ".join(col_tokens[begin:]))
        if col is not None:
            break
    filled = int(col is not None) + 1 + int(value is not None)
    if col is None or value is None:
        text = " ".join(col_tokens) if col is None else None
        question = (
            "Which column should I filter on, and against what value "
            "(for example: 'cost over 100')?"
        )
        return _Match("filter", filled, 3, None, (), question, text)
    lit = int(value) if float(value).is_integer() else value
    predicate = Binary(op, Col(col), Lit(lit))
    rationale = (f"keeping rows where {serialize_expr(predicate)}",)
    chain = CommandChain((Filter(predicate),))
    return _Match("filter", 3, 3, chain, rationale, "")


_AGG_WORDS = {
    "sum": "sum", "total": "sum",
    "average": "mean", "mean": "mean", "avg": "mean",
    "count": "count", "number": "count",
    "minimum": "min", "min": "min",
    "maximum": "max", "max": "max",
}


def _try_aggregate(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    trigger = next((i for i, t in enumerate(tokens) if t in _AGG_WORDS), None)
    if trigger is None:
        return None
    fn = _AGG_WORDS[tokens[trigger]]
    grouped = next(
        (i for i, t in enumerate(tokens) if t in ("by", "per", "each")), None
    )
    if grouped is not None and grouped > trigger:
        measure_tokens = tokens[trigger + 1 : grouped]
        key_tokens = _strip_stopwords(tokens[grouped + 1 :])
    else:
        measure_tokens = tokens[trigger + 1 :]
        key_tokens = []
    hit, text = ctx.resolve_measure_text(measure_tokens)
    total = 2 if grouped is not None and grouped > trigger else 1
    key = None
    if key_tokens:
        for end in range(len(key_tokens), 0, -1):
            key = ctx.resolve_col(" ".join(key_tokens[:end]))
            if key is not None:
                break
    filled = int(hit is not None) + (
        int(key is not None) if total == 2 else 0
    )
    if hit is None:
        question = f"Which column should I take the {fn} of?"
        return _Match("aggregate", filled, total, None, (), question, text)
    if total == 2 and key is None:
        question = "Which column should I group by?"
        return _Match(
            "aggregate", filled, total, None, (), question,
            " ".join(key_tokens) or None,
        )
    steps, col, rationale = _measure_steps(hit)
    if total == 2:
        agg = Agg(fn, col, f"{fn}_{normalize_name(col)}")
        steps.append(GroupBy((key,), (agg,)))
        rationale.append(f"grouping by `{key}` and computing {fn}(`{col}`)")
    else:
        steps.append(Describe((col,)))
        rationale.append(
            f"profiling `{col}`; the {fn} appears in the statistics table"
        )
    return _Match(
        "aggregate", filled, total, CommandChain(tuple(steps)),
        tuple(rationale), "",
    )


def _try_describe(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    triggers = {
        "describe", "summarize", "summarise", "summary", "statistics",
        "stats", "overview", "profile",
    }
    if not any(t in triggers for t in tokens):
        return None
    cols = []
    for t in _strip_stopwords(tokens):
        if t in triggers or t in ("table", "data", "dataset", "columns"):
            continue
        col = ctx.resolve_col(t)
        if col is not None and col not in cols:
            cols.append(col)
    chain = CommandChain((Describe(tuple(cols) if cols else None),))
    what = ", ".join(f"`{c}`" for c in cols) if cols else "every column"
    return _Match(
        "describe", 0, 0, chain,
        (f"profiling column statistics for {what}",), "",
    )


_PLOT_KIND_WORDS = {
    "bar": "bar", "bars": "bar",
    "line": "line", "trend": "line",
    "scatter": "scatter", "scatterplot": "scatter",
    "hist": "hist", "histogram": "hist", "distribution": "hist",
}


def _try_plot(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    triggers = {"plot", "chart", "graph", "draw", "visualize", "visualise"}
    kind_hits = [t for t in tokens if t in _PLOT_KIND_WORDS]
    if not any(t in triggers for t in tokens) and not kind_hits:
        return None
    kind = _PLOT_KIND_WORDS[kind_hits[0]] if kind_hits else "bar"
    content = [
        t for t in tokens
        if t not in triggers and t not in _PLOT_KIND_WORDS
    ]
    content = _strip_stopwords_keep(content, keep=("by", "vs", "versus", "against"))
    x_text: list[str] = []
    y_text: list[str] = []
    split = next(
        (i for i, t in enumerate(content) if t in ("by", "vs", "versus", "against")),
        None,
    )
    if split is None:
        x_text = content
    else:
        first, second = content[:split], content[split + 1 :]
        if content[split] == "by":
            # "Y by X": the grouping axis comes second
            y_text, x_text = first, second
        else:
            x_text, y_text = first, second
    x = ctx.resolve_col(" ".join(_strip_stopwords(x_text)))
    if x is None and x_text:
        for begin in range(len(x_text)):
            x = ctx.resolve_col(" ".join(x_text[begin:]))
            if x is not None:
                break
    y = ctx.resolve_col(" ".join(_strip_stopwords(y_text))) if y_text else None
    if x is None:
        question = "Which column should I plot?"
        return _Match(
            "plot", 0, 1, None, (), question,
            " ".join(x_text) or None,
        )
    if y_text and y is None:
        return _Match(
            "plot", 0, 1, None, (),
            f"Which column is '{' '.join(y_text)}'?", " ".join(y_text),
        )
    if kind == "hist":
        y = None
    plot = Plot(kind, x, y, None)
    label = f"`{y}` against `{x}`" if y else f"`{x}`"
    chain = CommandChain((plot,))
    return _Match(
        "plot", 1, 1, chain, (f"charting {label} as a {kind} plot",), "",
    )


def _strip_stopwords_keep(tokens: Sequence[str], keep: tuple[str, ...]) -> list[str]:
    return [t for t in tokens if t in keep or t not in _STOPWORDS]


def _try_predict(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    triggers = {"predict", "forecast", "estimate"}
    trigger = next((i for i, t in enumerate(tokens) if t in triggers), None)
    if trigger is None:
        return None
    using_at = next((i for i, t in enumerate(tokens) if t == "using"), None)
    if using_at is not None and using_at > trigger:
        target_tokens = tokens[trigger + 1 : using_at]
        feature_tokens = [
            t for t in _strip_stopwords(tokens[using_at + 1 :]) if t != "and"
        ]
    else:
        target_tokens = tokens[trigger + 1 :]
        feature_tokens = []
    hit, text = ctx.resolve_measure_text(target_tokens)
    if hit is None:
        question = "Which numeric column should I predict?"
        if text:
            question = f"Which numeric column should I predict? I couldn't match '{text}'."
        return _Match("predict", 0, 1, None, (), question, text)
    using = []
    i = 0
    while i < len(feature_tokens):
        hit_col = None
        for end in range(len(feature_tokens), i, -1):
            col = ctx.resolve_col(" ".join(feature_tokens[i:end]))
            if col is not None:
                hit_col, i = col, end
                break
        if hit_col is None:
            i += 1
        elif hit_col not in using:
            using.append(hit_col)
    steps, col, rationale = _measure_steps(hit)
    steps.append(Predict(col, tuple(using) if using else None))
    with_what = (
        "with " + ", ".join(f"`{u}`" for u in using)
        if using else "with every other numeric column"
    )
    rationale.append(f"fitting a linear model for `{col}` {with_what}")
    return _Match(
        "predict", 1, 1, CommandChain(tuple(steps)), tuple(rationale), "",
    )


def _try_show(tokens: list[str], ctx: _Ctx) -> Optional[_Match]:
    triggers = {"show", "display", "list", "give", "get", "what", "see", "view"}
    if not any(t in triggers for t in tokens):
        return None
    rest = [t for t in _strip_stopwords(tokens) if t not in triggers]
    if not rest or set(rest) <= {"table", "data", "dataset", "everything", "rows"}:
        chain = CommandChain(())
        return _Match(
            "show", 1, 1, chain, ("query asks for the table as-is",), "",
        )
    cols = []
    for t in rest:
        if t == "and":
            continue
        col = ctx.resolve_col(t)
        if col is not None and col not in cols:
            cols.append(col)
    if not cols:
        question = (
            "Which columns or statistics do you want? "
            "Try naming a column and what to do with it."
        )
        return _Match("show", 0, 1, None, (), question, " ".join(rest))
    chain = CommandChain((Select(tuple(cols)),))
    shown = ", ".join(f"`{c}`" for c in cols)
    return _Match("show", 1, 1, chain, (f"showing columns {shown}",), "")


_PATTERNS: tuple[tuple[str, Callable], ...] = (
    ("top_k", _try_top_k),
    ("sort", _try_sort),
    ("filter", _try_filter),
    ("aggregate", _try_aggregate),
    ("predict", _try_predict),
    ("plot", _try_plot),
    ("describe", _try_describe),
    ("show", _try_show),
)


def _all_matches(query: str, schema: Schema, registry: MeasureRegistry) -> list[_Match]:
    tokens = _tokens(query)
    ctx = _Ctx(schema, registry)
    matches = []
    for _, fn in _PATTERNS:
        m = fn(tokens, ctx)
        if m is not None:
            matches.append(m)
    return matches


def _best_match(matches: list[_Match]) -> Optional[_Match]:
    if not matches:
        return None
    return max(
        matches,
        key=lambda m: (m.fraction, -_PRIORITY.index(m.pattern)),
    )


def vagueness_score(
    query: str, schema: Schema, registry: Optional[MeasureRegistry] = None
) -> float:
    best = _best_match(
        _all_matches(query, schema, registry or default_registry())
    )
    if best is None:
        return 1.0
    return 1.0 - best.fraction


def _candidates(
    schema: Schema, unresolved_text: Optional[str], limit: int = 5
) -> tuple[str, ...]:
    names = list(schema.names)
    if not unresolved_text:
        return tuple(names[:limit])
    probe = trigram_vector(unresolved_text, 64)
    scored = [
        (i, cosine(probe, trigram_vector(name, 64)))
        for i, name in enumerate(names)
    ]
    scored.sort(key=lambda pair: -pair[1])
    return tuple(names[i] for i, _ in scored[:limit])


_NO_PATTERN_QUESTION = (
    "Could you be more specific? Name a column and what to do with it, "
    "for example: 'show top 5 by box_office'."
)

EXEMPLAR_REUSE_SIMILARITY = 0.9


def plan(
    query: str,
    schema: Schema,
    registry: Optional[MeasureRegistry] = None,
    exemplars: Optional[ExemplarStore] = None,
    vagueness_threshold: float = DEFAULT_VAGUENESS_THRESHOLD,
) -> PlanOutcome:
    registry = registry or default_registry()
    matches = _all_matches(query, schema, registry)
    best = _best_match(matches)

    if best is None:
        if exemplars is not None and len(exemplars) > 0:
            (ex, similarity), *_ = retrieve_exemplars(query, exemplars, 1)
            if similarity >= EXEMPLAR_REUSE_SIMILARITY and validate(
                ex.chain, schema
            ).ok:
                return Plan(
                    ex.chain,
                    (
                        f"reusing the remembered query '{ex.query}' "
                        f"(similarity {similarity:.2f})",
                    ),
                )
        return Rejection(_NO_PATTERN_QUESTION, _candidates(schema, None))

    vagueness = 1.0 - best.fraction
    if best.chain is None or vagueness >= vagueness_threshold:
        question = best.question or _NO_PATTERN_QUESTION
        return Rejection(question, _candidates(schema, best.unresolved_text))

    report = validate(best.chain, schema)
    if not report.ok:
        issue = report.issues[0]
        return Rejection(
            f"I could not apply that to this table ({issue.detail}). "
            "Could you rephrase?",
            _candidates(schema, best.unresolved_text),
        )
    return Plan(best.chain, best.rationale)


# --- adapter seam ------------------------------------------------------------------

class Planner(Protocol):
    def plan(self, query: str, schema: Schema) -> PlanOutcome:
        ...


class RulePlanner:
    """Reference planner: deterministic rules over patterns and the registry."""

    def __init__(
        self,
        registry: Optional[MeasureRegistry] = None,
        exemplars: Optional[ExemplarStore] = None,
        vagueness_threshold: float = DEFAULT_VAGUENESS_THRESHOLD,
    ):
        self.registry = registry or default_registry()
        self.exemplars = exemplars if exemplars is not None else ExemplarStore()
        self.vagueness_threshold = vagueness_threshold

    def plan(self, query: str, schema: Schema) -> PlanOutcome:
        return plan(
            query, schema, self.registry, self.exemplars,
            self.vagueness_threshold,
        )


# --- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class PlannerConfig:
    registry: MeasureRegistry
    synonyms: dict[str, tuple[str, ...]]
    vagueness_threshold: float


def load_planner_config(text: str) -> PlannerConfig:
    """Parse the YAML planner configuration.

    Keys: ``vagueness_threshold`` (float), ``synonyms`` (column → list of
    alternative names), ``measures`` (name → {roles, expr}).
    """
    raw = yaml.safe_load(text) or {}
    threshold = float(raw.get("vagueness_threshold", DEFAULT_VAGUENESS_THRESHOLD))
    if not (0.0 < threshold <= 1.0):
        raise ValueError("vagueness_threshold must be in (0, 1]")
    synonyms = {
        str(col): tuple(str(s) for s in alts)
        for col, alts in (raw.get("synonyms") or {}).items()
    }
    entries = []
    for name, spec in (raw.get("measures") or {}).items():
        roles = tuple(str(r) for r in spec.get("roles", ()))
        expr_text = str(spec["expr"])
        parse_expr(expr_text)  # fail fast on malformed templates
        entries.append(MeasureDef(str(name), roles, expr_text))
    registry = MeasureRegistry(tuple(entries)) if entries else default_registry()
    return PlannerConfig(registry, synonyms, threshold)
