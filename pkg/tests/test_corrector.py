import random

import pytest

from gen_ast import gen_ast_chain
from oracle import gen_chain, gen_table
from tablechain.commands import Derive, Describe, GroupBy, Select, Sort
from tablechain.corrector import Correction, correct, levenshtein, resolve_column
from tablechain.errors import AmbiguousColumn
from tablechain.parser import parse_chain, serialize_chain
from tablechain.table import ColumnMeta, Schema, load_csv, with_meta

MOVIE_SCHEMA = Schema("movies", (
    ColumnMeta("title", "string"),
    ColumnMeta("box_office", "int", synonyms=("revenue", "gross")),
    ColumnMeta("cost", "int"),
))


def infos(schema: Schema):
    """resolve_column's working form: (name, synonyms) pairs."""
    return [(c.name, c.synonyms) for c in schema.columns]


MOVIE_COLS = infos(MOVIE_SCHEMA)


@pytest.mark.parametrize("a,b,d", [
    ("", "", 0),
    ("abc", "abc", 0),
    ("abc", "abd", 1),
    ("cst", "cost", 1),
    ("kitten", "sitting", 3),
    ("", "abc", 3),
    ("flaw", "lawn", 2),
])
def test_levenshtein(a, b, d):
    assert levenshtein(a, b) == d
    assert levenshtein(b, a) == d


def test_resolve_exact():
    assert resolve_column("cost", MOVIE_COLS) == ("cost", "exact")


def test_resolve_case_and_normalization():
    assert resolve_column("COST", MOVIE_COLS) == ("cost", "case")
    assert resolve_column("Box Office", MOVIE_COLS) == (
        "box_office", "normalize"
    )


def test_resolve_synonym():
    assert resolve_column("revenue", MOVIE_COLS) == (
        "box_office", "synonym"
    )
    assert resolve_column("Gross", MOVIE_COLS) == (
        "box_office", "synonym"
    )


def test_resolve_edit_distance():
    assert resolve_column("cst", MOVIE_COLS) == ("cost", "edit_distance")
    assert resolve_column("box_offce", MOVIE_COLS) == (
        "box_office", "edit_distance"
    )


def test_short_names_allow_distance_one_only():
    # "cost" has 4 chars (< 5), so distance 2 is out of reach
    assert resolve_column("cot", MOVIE_COLS)[0] == "cost"
    assert resolve_column("ct", MOVIE_COLS) is None


def test_resolve_miss_returns_none():
    assert resolve_column("profit", MOVIE_COLS) is None


def test_ambiguous_tie_raises_with_sorted_candidates():
    schema = Schema("films", (
        ColumnMeta("cost", "int"),
        ColumnMeta("cast", "string"),
    ))
    with pytest.raises(AmbiguousColumn) as exc:
        resolve_column("cst", infos(schema))
    assert exc.value.name == "cst"
    assert exc.value.candidates == ["cast", "cost"]


def test_correct_rewrites_and_records(movies):
    t = with_meta(movies, {"box_office": ["revenue"]})
    chain = parse_chain("SELECT title, revenue; SORT Box_Office DESC")
    out = correct(chain, t.schema)
    assert out.chain.commands[0] == Select(("title", "box_office"))
    assert out.chain.commands[1] == Sort("box_office", ascending=False)
    assert out.corrections == (
        Correction(0, "revenue", "box_office", "synonym"),
        Correction(1, "Box_Office", "box_office", "case"),
    )


def test_correct_exact_matches_are_not_recorded(movies):
    chain = parse_chain("SORT cost ASC; SELECT title")
    out = correct(chain, movies.schema)
    assert out.chain == chain
    assert out.corrections == ()


def test_correct_leaves_unresolvable_names_alone(movies):
    chain = parse_chain("SORT profit ASC")
    out = correct(chain, movies.schema)
    assert out.chain == chain
    assert out.corrections == ()


def test_correct_tracks_schema_evolution(movies):
    # margin only exists after the Derive, and gets fixed where referenced
    chain = parse_chain(
        "DERIVE margin = (box_office - cst) / cst; SORT Margin DESC"
    )
    out = correct(chain, movies.schema)
    d = out.chain.commands[0]
    assert isinstance(d, Derive)
    assert serialize_chain(out.chain).splitlines()[0] == (
        "DERIVE margin = (box_office - cost) / cost;"
    )
    assert out.chain.commands[1] == Sort("margin", ascending=False)
    methods = {c.method for c in out.corrections}
    assert methods == {"edit_distance", "case"}


def test_correct_derive_out_name_is_not_rewritten(movies):
    # out name "cst" is a fresh column being created, not a reference
    chain = parse_chain("DERIVE cst = cost + 1")
    out = correct(chain, movies.schema)
    assert out.chain.commands[0].out_name == "cst"
    assert out.corrections == ()


def test_correct_groupby_products_visible_downstream(movies):
    chain = parse_chain("GROUPBY title SUM(cost) AS spend; SORT spnd DESC")
    out = correct(chain, movies.schema)
    assert out.chain.commands[1] == Sort("spend", ascending=False)


def test_correct_describe_output_columns_visible_downstream(movies):
    chain = parse_chain("DESCRIBE; SORT Null_Frac DESC")
    out = correct(chain, movies.schema)
    assert out.chain.commands[1] == Sort("null_frac", ascending=False)


def test_correct_select_removes_pruned_columns(movies):
    chain = parse_chain("SELECT title; SORT cst ASC")
    out = correct(chain, movies.schema)
    # cost was projected away, so "cst" has nothing to match
    assert out.chain.commands[1] == Sort("cst", ascending=True)


def test_correct_is_idempotent_on_generated_chains():
    rng = random.Random(99)
    for i in range(1000):
        t = gen_table(rng)
        chain = gen_chain(rng, t)
        once = correct(chain, t.schema)
        twice = correct(once.chain, t.schema)
        assert twice.chain == once.chain, f"case {i}"
        assert twice.corrections == (), f"case {i}"


def test_correct_is_idempotent_on_arbitrary_asts():
    # even chains that will never validate must reach a fixed point
    rng = random.Random(7)
    schema = MOVIE_SCHEMA
    for i in range(300):
        chain = gen_ast_chain(rng)
        once = correct(chain, schema)
        twice = correct(once.chain, schema)
        assert twice.chain == once.chain, f"case {i}"


def test_correct_ambiguity_propagates(movies):
    schema = Schema("films", (
        ColumnMeta("cost", "int"),
        ColumnMeta("cast", "string"),
    ))
    with pytest.raises(AmbiguousColumn):
        correct(parse_chain("SORT cst DESC"), schema)
