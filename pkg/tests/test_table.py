import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablechain.errors import BadPermutation, RaggedRow, UnknownColumn, Utf8Error
from tablechain.table import (
    ColumnMeta, Schema, Table, column_stats, format_cell, load_csv,
    normalize_name, parse_datetime, permute, to_csv, with_meta,
)


def test_load_csv_infers_narrowest_types(movies):
    assert [c.ctype for c in movies.schema.columns] == ["string", "int", "int"]
    assert movies.n_rows == 6
    assert movies.column_values("box_office") == (100, 300, 60, 240, 90, 30)


def test_load_csv_types_across_lattice():
    t = load_csv(
        b"flag,n,x,when,label\n"
        b"true,1,1.5,2021-01-01,a\n"
        b"false,2,2,2021-06-01T12:00:00Z,b\n"
    )
    assert [c.ctype for c in t.schema.columns] == [
        "bool", "int", "float", "datetime", "string"
    ]
    assert t.column_values("flag") == (True, False)
    assert t.column_values("x") == (1.5, 2.0)
    assert t.column_values("when")[1] == datetime(2021, 6, 1, 12, tzinfo=timezone.utc)


def test_load_csv_empty_cells_are_null_and_do_not_constrain_type():
    t = load_csv(b"a,b\n1,\n,x\n3,\n")
    assert [c.ctype for c in t.schema.columns] == ["int", "string"]
    assert t.column_values("a") == (1, None, 3)
    assert t.column_values("b") == (None, "x", None)


def test_load_csv_nonfinite_floats_become_null():
    t = load_csv(b"x\n1.5\ninf\nnan\n-inf\n")
    assert t.schema.columns[0].ctype == "float"
    assert t.column_values("x") == (1.5, None, None, None)


def test_load_csv_oversized_int_falls_back_to_float():
    t = load_csv(b"n\n1\n9223372036854775808\n")
    assert t.schema.columns[0].ctype == "float"


def test_load_csv_ragged_row_reports_physical_line():
    data = b"a,b\n1,2\n3,4\n5\n"
    with pytest.raises(RaggedRow) as exc:
        load_csv(data)
    assert exc.value.line_no == 4
    assert exc.value.expected == 2
    assert exc.value.got == 1


def test_load_csv_bad_utf8_reports_offset():
    with pytest.raises(Utf8Error) as exc:
        load_csv(b"a,b\n1,\xff\n")
    assert exc.value.offset == 6


def test_load_csv_blank_header_cells_get_positional_names():
    t = load_csv(b"a,,c\n1,2,3\n")
    assert list(t.schema.names) == ["a", "col_2", "c"]


def test_load_csv_quoted_fields():
    t = load_csv(b'a,b\n"x,y","say ""hi"""\n')
    assert t.row(0) == ("x,y", 'say "hi"')


def test_schema_index_of_unknown():
    t = load_csv(b"a\n1\n")
    with pytest.raises(UnknownColumn):
        t.schema.index_of("b")


@pytest.mark.parametrize("text,expected", [
    ("2021-01-02T03:04:05Z", datetime(2021, 1, 2, 3, 4, 5, tzinfo=timezone.utc)),
    ("2021-01-02 03:04:05", datetime(2021, 1, 2, 3, 4, 5, tzinfo=timezone.utc)),
    ("2021-01-02", datetime(2021, 1, 2, tzinfo=timezone.utc)),
    ("2021-01-02T05:00:00+02:00", datetime(2021, 1, 2, 3, tzinfo=timezone.utc)),
])
def test_parse_datetime(text, expected):
    assert parse_datetime(text) == expected


def test_parse_datetime_truncates_microseconds():
    assert parse_datetime("2021-01-02T03:04:05.999999Z").microsecond == 0


@pytest.mark.parametrize("value,text", [
    (None, ""),
    (True, "true"),
    (False, "false"),
    (1.5, "1.5"),
    (0.1, "0.1"),
    (datetime(2021, 1, 2, tzinfo=timezone.utc), "2021-01-02T00:00:00+00:00"),
    ("x", "x"),
    (-3, "-3"),
])
def test_format_cell(value, text):
    assert format_cell(value) == text


def test_normalize_name():
    assert normalize_name("Box Office") == "box_office"
    assert normalize_name(" Net  Profit ") == "net_profit"
    assert normalize_name("COST") == "cost"


# --- statistics -----------------------------------------------------------------

def test_column_stats_numeric_fixture(movies):
    s = column_stats(movies, "box_office")
    assert s.count_nonnull == 6
    assert s.null_frac == 0.0
    assert s.mean == pytest.approx(136.6667, abs=5e-5)
    assert s.min == 30.0 and s.max == 300.0
    assert s.distinct_count == 6
    # sorted values [30, 60, 90, 100, 240, 300]
    assert s.q50 == 95.0
    assert s.q25 == 67.5
    assert s.q75 == 205.0


def test_column_stats_string_column(movies):
    s = column_stats(movies, "title")
    assert s.count_nonnull == 6
    assert s.mean is None and s.std is None
    assert s.min is None and s.max is None
    assert s.q25 is None and s.q50 is None and s.q75 is None
    assert s.distinct_count == 6
    # six distinct singletons: maximum-entropy, normalized to 1.0
    assert s.entropy_norm == pytest.approx(1.0)
    assert s.top_freq_ratio == pytest.approx(1 / 6)


def test_column_stats_zero_rows():
    t = load_csv(b"x\n")
    s = column_stats(t, "x")
    assert s.count_nonnull == 0
    assert s.null_frac == 0.0
    assert s.distinct_count == 0
    assert s.mean is None


def test_column_stats_constant_column_has_no_entropy():
    t = load_csv(b"x\n7\n7\n7\n")
    s = column_stats(t, "x")
    assert s.distinct_count == 1
    assert s.entropy_norm is None
    assert s.std == 0.0


def test_column_stats_null_frac():
    t = load_csv(b"x,y\n1,a\n,b\n,c\n4,d\n")
    s = column_stats(t, "x")
    assert s.null_frac == 0.5
    assert s.count_nonnull == 2


def test_blank_line_is_a_null_row_in_single_column_csv():
    t = load_csv(b"x\n1\n\n3\n")
    assert t.column_values("x") == (1, None, 3)


def test_column_stats_top_value_tie_breaks_by_value_order():
    t = load_csv(b"x\nb\na\nb\na\n")
    s = column_stats(t, "x")
    assert s.top_value == "a"
    assert s.top_freq_ratio == 0.5


def test_quantiles_match_numpy_linear_interpolation():
    rng = np.random.default_rng(5)
    for _ in range(50):
        vals = [float(v) for v in rng.normal(0, 10, size=rng.integers(1, 30)).round(4)]
        body = "".join(f"{v!r}\n" for v in vals)
        t = load_csv(f"x\n{body}".encode())
        s = column_stats(t, "x")
        for q, got in ((0.25, s.q25), (0.5, s.q50), (0.75, s.q75)):
            assert got == pytest.approx(float(np.quantile(vals, q)), rel=1e-12)
        assert s.mean == pytest.approx(float(np.mean(vals)), rel=1e-12)
        assert s.std == pytest.approx(float(np.std(vals)), rel=1e-12)


def test_column_stats_invariant_under_row_permutation(movies):
    perm = [3, 1, 4, 0, 5, 2]
    shuffled = permute(movies, row_perm=perm)
    for name in movies.schema.names:
        assert column_stats(shuffled, name) == column_stats(movies, name)


# --- permutation helpers ----------------------------------------------------------

def test_permute_rows_and_columns(movies):
    p = permute(movies, row_perm=[5, 4, 3, 2, 1, 0], col_perm=[2, 0, 1])
    assert list(p.schema.names) == ["cost", "title", "box_office"]
    assert p.row(0) == (20, "F", 30)


def test_permute_rejects_bad_permutations(movies):
    with pytest.raises(BadPermutation):
        permute(movies, row_perm=[0, 1])
    with pytest.raises(BadPermutation):
        permute(movies, col_perm=[0, 0, 1])


def test_with_meta_attaches_synonyms(movies):
    t = with_meta(movies, {"box_office": ["revenue", "gross"]})
    assert t.schema.column("box_office").synonyms == ("revenue", "gross")
    # cells untouched
    assert t.columns == movies.columns


# --- round-trips -------------------------------------------------------------------

_name = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=6)
_cell_strategies = {
    "int": st.integers(min_value=-(2 ** 63), max_value=2 ** 63 - 1),
    "float": st.floats(allow_nan=False, allow_infinity=False, width=64),
    "string": _name.filter(lambda s: s not in ("true", "false")),
    "bool": st.booleans(),
    "datetime": st.integers(min_value=0, max_value=10 ** 9).map(
        lambda s: datetime(2000, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=s)
    ),
}


@st.composite
def typed_tables(draw):
    n_cols = draw(st.integers(1, 4))
    n_rows = draw(st.integers(1, 8))
    metas, cols = [], []
    names = draw(st.lists(_name, min_size=n_cols, max_size=n_cols, unique=True))
    for j in range(n_cols):
        ctype = draw(st.sampled_from(list(_cell_strategies)))
        base = _cell_strategies[ctype]
        cells = draw(st.lists(st.none() | base, min_size=n_rows, max_size=n_rows))
        if all(v is None for v in cells):
            cells[0] = draw(base)
        metas.append(ColumnMeta(names[j], ctype))
        cols.append(tuple(cells))
    return Table(Schema("t", tuple(metas)), tuple(cols))


@settings(max_examples=60, deadline=None)
@given(typed_tables())
def test_csv_round_trip(t):
    back = load_csv(to_csv(t), table_name="t")
    assert back.schema == t.schema
    assert back.columns == t.columns


def test_to_csv_fixture(movies):
    out = to_csv(movies).decode()
    assert out.splitlines()[0] == "title,box_office,cost"
    assert out.splitlines()[2] == "B,300,100"
    assert len(out.splitlines()) == 7


def test_stats_mean_uses_compensated_summation():
    # 1e16 + 1 + 1 ... classic cancellation case
    t = load_csv(b"x\n10000000000000000.0\n1.0\n1.0\n-10000000000000000.0\n")
    s = column_stats(t, "x")
    assert s.mean == 0.5
    assert not math.isnan(s.std)
