"""Column descriptors feeding the table encoder.

Each column becomes a 12-slot numeric vector plus a 37-dim metadata vector
(32 hashed name trigrams and a 5-way type one-hot). All numeric slots derive
from column_stats, which works on sorted values, so the descriptors are
invariant to row order by construction. Every slot is finite and clipped
into [-1, 1]; degenerate denominators yield 0 (median position 0.5 when the
column is a constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptySchema
from ..table import CTYPES, Table, column_stats
from ..textvec import trigram_vector

NUMERIC_DIM = 12
META_DIM = 37
NAME_DIM = 32

NUMERIC_SLOTS = (
    "null_frac", "distinct_ratio", "frac_positive", "frac_zero",
    "log_mean", "log_std", "iqr_over_range", "median_position",
    "skew_proxy", "entropy_norm", "top_freq_ratio", "is_numeric",
)

_TYPE_ORDER = ("int", "float", "string", "bool", "datetime")
assert set(_TYPE_ORDER) == set(CTYPES)


@dataclass(frozen=True, eq=False)
class ColumnFeatures:
    name: str
    numeric: np.ndarray  # (12,)
    meta: np.ndarray     # (37,)


def _clog(x: float) -> float:
    """Signed, squashed log magnitude: keeps huge means inside [-1, 1]."""
    v = math.copysign(math.log10(1.0 + abs(x)) / 10.0, x)
    return max(-1.0, min(1.0, v))


def featurize_column(t: Table, name: str) -> ColumnFeatures:
    meta_col = t.schema.column(name)
    stats = column_stats(t, name)
    is_numeric = meta_col.ctype in ("int", "float")

    values = [v for v in t.column_values(name) if v is not None]
    count = stats.count_nonnull

    slots = np.zeros(NUMERIC_DIM, dtype=np.float64)
    slots[0] = stats.null_frac
    slots[1] = stats.distinct_count / count if count else 0.0
    if is_numeric and count:
        slots[2] = sum(1 for v in values if v > 0) / count
        slots[3] = sum(1 for v in values if v == 0) / count
        slots[4] = _clog(stats.mean)
        slots[5] = _clog(stats.std)
        spread = stats.max - stats.min
        if spread == 0.0:
            slots[7] = 0.5
        elif math.isfinite(spread):
            slots[6] = (stats.q75 - stats.q25) / spread
            slots[7] = (stats.q50 - stats.min) / spread
        if stats.std > 0.0 and math.isfinite(stats.std) and math.isfinite(stats.mean):
            raw = (stats.mean - stats.q50) / stats.std
            slots[8] = max(-1.0, min(1.0, raw))
    slots[9] = stats.entropy_norm if stats.entropy_norm is not None else 0.0
    slots[10] = stats.top_freq_ratio if stats.top_freq_ratio is not None else 0.0
    slots[11] = 1.0 if is_numeric else 0.0

    one_hot = np.zeros(len(_TYPE_ORDER), dtype=np.float64)
    one_hot[_TYPE_ORDER.index(meta_col.ctype)] = 1.0
    meta_vec = np.concatenate([trigram_vector(name, NAME_DIM), one_hot])
    return ColumnFeatures(name, slots, meta_vec)


def featurize(t: Table) -> list[ColumnFeatures]:
    if t.n_cols == 0:
        raise EmptySchema("cannot featurize a table with no columns")
    return [featurize_column(t, name) for name in t.schema.names]


def feature_matrices(t: Table) -> tuple[np.ndarray, np.ndarray]:
    """(meta, numeric) matrices of shape (n_cols, 37) and (n_cols, 12)."""
    feats = featurize(t)
    meta = np.stack([f.meta for f in feats])
    numeric = np.stack([f.numeric for f in feats])
    return meta, numeric
