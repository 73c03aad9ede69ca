import numpy as np
import pytest

from tablechain.encoder.features import (
    META_DIM, NAME_DIM, NUMERIC_DIM, NUMERIC_SLOTS, featurize,
    featurize_column, feature_matrices,
)
from tablechain.errors import EmptySchema
from tablechain.table import Schema, Table, load_csv, permute

SLOT = {name: i for i, name in enumerate(NUMERIC_SLOTS)}


def test_dimensions():
    assert NUMERIC_DIM == 12
    assert META_DIM == 37
    assert NAME_DIM == 32
    assert len(NUMERIC_SLOTS) == NUMERIC_DIM


def test_box_office_slots_match_hand_computed_values(movies):
    # frozen from an independent numpy/math computation over the fixture column
    f = featurize_column(movies, "box_office")
    expected = {
        "null_frac": 0.0,
        "distinct_ratio": 1.0,
        "frac_positive": 1.0,
        "frac_zero": 0.0,
        "log_mean": 0.21388287969367387,
        "log_std": 0.19975268464855062,
        "iqr_over_range": 0.5092592592592593,
        "median_position": 0.24074074074074073,
        "skew_proxy": 0.4233034134241226,
        "entropy_norm": 1.0,
        "top_freq_ratio": 0.16666666666666666,
        "is_numeric": 1.0,
    }
    for name, want in expected.items():
        assert f.numeric[SLOT[name]] == pytest.approx(want, abs=1e-12), name


def test_string_column_slots(movies):
    f = featurize_column(movies, "title")
    assert f.numeric[SLOT["is_numeric"]] == 0.0
    assert f.numeric[SLOT["entropy_norm"]] == pytest.approx(1.0, abs=1e-12)
    assert f.numeric[SLOT["top_freq_ratio"]] == pytest.approx(1 / 6)
    assert f.numeric[SLOT["distinct_ratio"]] == 1.0
    for moment in ("frac_positive", "frac_zero", "log_mean", "log_std",
                   "iqr_over_range", "median_position", "skew_proxy"):
        assert f.numeric[SLOT[moment]] == 0.0


def test_all_null_column_slots():
    t = load_csv(b"x,y\n,1\n,2\n")
    f = featurize_column(t, "x")
    assert f.numeric[SLOT["null_frac"]] == 1.0
    nonzero = [NUMERIC_SLOTS[i] for i in np.flatnonzero(f.numeric)]
    assert nonzero == ["null_frac"]


def test_constant_column_degenerate_denominators():
    t = load_csv(b"x\n7\n7\n7\n")
    f = featurize_column(t, "x")
    assert f.numeric[SLOT["median_position"]] == 0.5
    assert f.numeric[SLOT["iqr_over_range"]] == 0.0
    assert f.numeric[SLOT["skew_proxy"]] == 0.0
    assert f.numeric[SLOT["frac_positive"]] == 1.0


def test_slots_bounded_even_for_extreme_values():
    t = load_csv(b"x\n1e300\n-1e300\n0\n")
    f = featurize_column(t, "x")
    assert np.all(np.isfinite(f.numeric))
    assert np.all(f.numeric >= -1.0) and np.all(f.numeric <= 1.0)


def test_meta_vector_layout(movies):
    f = featurize_column(movies, "box_office")
    assert f.meta.shape == (META_DIM,)
    name_part, one_hot = f.meta[:NAME_DIM], f.meta[NAME_DIM:]
    assert np.linalg.norm(name_part) == pytest.approx(1.0, abs=1e-12)
    assert list(one_hot) == [1.0, 0.0, 0.0, 0.0, 0.0]  # int
    title = featurize_column(movies, "title")
    assert list(title.meta[NAME_DIM:]) == [0.0, 0.0, 1.0, 0.0, 0.0]  # string


def test_type_one_hot_for_every_ctype():
    t = load_csv(
        b"i,f,s,b,d\n1,1.5,x,true,2021-01-01\n2,2.5,y,false,2021-01-02\n"
    )
    hots = {name: featurize_column(t, name).meta[NAME_DIM:] for name in t.schema.names}
    stacked = np.stack(list(hots.values()))
    assert np.array_equal(stacked.sum(axis=1), np.ones(5))
    assert np.array_equal(stacked.sum(axis=0), np.ones(5))


def test_featurize_order_matches_schema(movies):
    feats = featurize(movies)
    assert [f.name for f in feats] == ["title", "box_office", "cost"]


def test_featurize_empty_schema_raises():
    empty = Table(schema=Schema(table_name="none", columns=()), columns=())
    with pytest.raises(EmptySchema):
        featurize(empty)


def test_feature_matrices_shapes(movies):
    meta, numeric = feature_matrices(movies)
    assert meta.shape == (3, META_DIM)
    assert numeric.shape == (3, NUMERIC_DIM)


def test_features_invariant_to_row_order(movies):
    shuffled = permute(movies, row_perm=[5, 3, 1, 0, 4, 2])
    a_meta, a_num = feature_matrices(movies)
    b_meta, b_num = feature_matrices(shuffled)
    assert np.array_equal(a_meta, b_meta)
    assert np.array_equal(a_num, b_num)


def test_features_follow_column_permutation(movies):
    swapped = permute(movies, col_perm=[2, 0, 1])
    a_meta, a_num = feature_matrices(movies)
    b_meta, b_num = feature_matrices(swapped)
    assert np.array_equal(b_meta, a_meta[[2, 0, 1]])
    assert np.array_equal(b_num, a_num[[2, 0, 1]])
