"""Column-reference repair for command chains.

Each column reference is resolved against the schema as it stands at that
point in the chain (later commands see columns introduced by earlier ones).
Repair tries, in order: exact match, case-insensitive match, normalized-name
match, declared synonyms, then a unique closest name by edit distance over
normalized forms (distance at most 2, or 1 for references shorter than five
characters). A tie at the minimal distance raises AmbiguousColumn rather than
guessing. References that no rule can repair are left untouched; validation
reports them afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .commands import (
    Agg, Command, CommandChain, DeleteWhere, Derive, Describe, DESCRIBE_OUTPUT,
    Filter, GroupBy, InsertRow, Plot, Predict, Select, SliceRange, SliceTop,
    Sort, Update, map_expr_columns,
)
from .errors import AmbiguousColumn
from .table import Schema, normalize_name


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            ))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class Correction:
    command_index: int
    original: str
    replacement: str
    method: str  # case | normalize | synonym | edit_distance


@dataclass(frozen=True)
class CorrectedChain:
    chain: CommandChain
    corrections: tuple[Correction, ...]


# Available columns are tracked as (name, synonyms) pairs; synonyms only
# survive from the source schema, derived columns have none.
_ColumnInfo = tuple[str, tuple[str, ...]]


def resolve_column(
    name: str, available: Sequence[_ColumnInfo]
) -> Optional[tuple[str, str]]:
    """Resolve one reference. Returns (replacement, method), or None when
    nothing matches. ``method`` is "exact" for already-correct references."""
    names = [n for n, _ in available]
    if name in names:
        return name, "exact"
    lowered = name.lower()
    for n in names:
        if n.lower() == lowered:
            return n, "case"
    norm = normalize_name(name)
    for n in names:
        if normalize_name(n) == norm:
            return n, "normalize"
    for n, synonyms in available:
        if any(normalize_name(s) == norm for s in synonyms):
            return n, "synonym"
    limit = 1 if len(name) < 5 else 2
    best: list[str] = []
    best_d = limit + 1
    for n in names:
        d = levenshtein(norm, normalize_name(n))
        if d < best_d:
            best, best_d = [n], d
        elif d == best_d:
            best.append(n)
    if best_d > limit:
        return None
    if len(best) > 1:
        raise AmbiguousColumn(name, best)
    return best[0], "edit_distance"


def _stats_columns() -> list[_ColumnInfo]:
    return [(name, ()) for name, _ in DESCRIBE_OUTPUT]


def correct(chain: CommandChain, schema: Schema) -> CorrectedChain:
    available: list[_ColumnInfo] = [(c.name, c.synonyms) for c in schema.columns]
    corrections: list[Correction] = []
    out: list[Command] = []

    for index, cmd in enumerate(chain):
        def fix(name: str) -> str:
            resolved = resolve_column(name, available)
            if resolved is None:
                return name
            replacement, method = resolved
            if method != "exact":
                corrections.append(Correction(index, name, replacement, method))
            return replacement

        out.append(_correct_command(cmd, fix))
        available = _evolve(available, out[-1])

    return CorrectedChain(CommandChain(tuple(out)), tuple(corrections))


def _correct_command(cmd: Command, fix: Callable[[str], str]) -> Command:
    if isinstance(cmd, Select):
        return Select(tuple(fix(c) for c in cmd.cols))
    if isinstance(cmd, Filter):
        return Filter(map_expr_columns(cmd.predicate, fix))
    if isinstance(cmd, Sort):
        return Sort(fix(cmd.col), cmd.ascending)
    if isinstance(cmd, GroupBy):
        keys = tuple(fix(k) for k in cmd.keys)
        aggs = tuple(Agg(a.fn, fix(a.col), a.out_name) for a in cmd.aggs)
        return GroupBy(keys, aggs)
    if isinstance(cmd, Derive):
        return Derive(cmd.out_name, map_expr_columns(cmd.expr, fix))
    if isinstance(cmd, (SliceTop, SliceRange, InsertRow)):
        return cmd
    if isinstance(cmd, Update):
        return Update(
            fix(cmd.col),
            map_expr_columns(cmd.expr, fix),
            map_expr_columns(cmd.where, fix),
        )
    if isinstance(cmd, DeleteWhere):
        return DeleteWhere(map_expr_columns(cmd.predicate, fix))
    if isinstance(cmd, Describe):
        if cmd.cols is None:
            return cmd
        return Describe(tuple(fix(c) for c in cmd.cols))
    if isinstance(cmd, Plot):
        return replace(
            cmd, x=fix(cmd.x), y=fix(cmd.y) if cmd.y is not None else None
        )
    if isinstance(cmd, Predict):
        using = None if cmd.using is None else tuple(fix(c) for c in cmd.using)
        return Predict(fix(cmd.target), using)
    raise TypeError(f"unknown command {cmd!r}")


def _evolve(available: list[_ColumnInfo], cmd: Command) -> list[_ColumnInfo]:
    names = [n for n, _ in available]
    if isinstance(cmd, Select):
        keep = {}
        for n, syn in available:
            keep[n] = syn
        return [(c, keep.get(c, ())) for c in cmd.cols]
    if isinstance(cmd, Derive):
        if cmd.out_name in names:
            return available
        return available + [(cmd.out_name, ())]
    if isinstance(cmd, GroupBy):
        by_name = dict(available)
        out = [(k, by_name.get(k, ())) for k in cmd.keys]
        out += [(a.out_name, ()) for a in cmd.aggs]
        return out
    if isinstance(cmd, Describe):
        return _stats_columns()
    if isinstance(cmd, Predict):
        return available + [(f"predicted_{cmd.target}", ())]
    return available
