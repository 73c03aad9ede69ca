"""Seeded random table corpus for encoder pretraining and tests."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from ..table import ColumnMeta, Schema, Table

_WORDS = (
    "amount", "price", "score", "rating", "count", "size", "weight", "height",
    "speed", "budget", "revenue", "cost", "profit", "year", "age", "index",
    "label", "name", "city", "region", "status", "category", "active",
    "created", "updated", "duration", "total", "rank", "level", "group",
)

_EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)


def _random_column(rng: np.random.Generator, n_rows: int, ctype: str) -> tuple:
    null_rate = float(rng.uniform(0.0, 0.2))
    cells = []
    for _ in range(n_rows):
        if rng.random() < null_rate:
            cells.append(None)
            continue
        if ctype == "int":
            cells.append(int(rng.integers(-1000, 10_000)))
        elif ctype == "float":
            cells.append(float(np.round(rng.normal(0.0, 250.0), 4)))
        elif ctype == "bool":
            cells.append(bool(rng.random() < 0.5))
        elif ctype == "datetime":
            cells.append(_EPOCH + timedelta(days=int(rng.integers(0, 2000)),
                                            seconds=int(rng.integers(0, 86400))))
        else:
            word = _WORDS[int(rng.integers(0, len(_WORDS)))]
            cells.append(f"{word}{int(rng.integers(0, 40))}")
    return tuple(cells)


def synth_table(rng: np.random.Generator, index: int) -> Table:
    n_cols = int(rng.integers(3, 7))
    n_rows = int(rng.integers(8, 41))
    type_pool = ("int", "float", "string", "bool", "datetime")
    weights = np.array([0.3, 0.3, 0.2, 0.1, 0.1])
    metas = []
    cols = []
    used: set[str] = set()
    for j in range(n_cols):
        ctype = str(rng.choice(type_pool, p=weights))
        word = _WORDS[int(rng.integers(0, len(_WORDS)))]
        name = word if word not in used else f"{word}_{j}"
        used.add(name)
        metas.append(ColumnMeta(name, ctype))
        cols.append(_random_column(rng, n_rows, ctype))
    schema = Schema(f"synth_{index}", tuple(metas))
    return Table(schema, tuple(cols))


def synth_corpus(n_tables: int = 50, seed: int = 7) -> list[Table]:
    rng = np.random.default_rng(seed)
    return [synth_table(rng, i) for i in range(n_tables)]
