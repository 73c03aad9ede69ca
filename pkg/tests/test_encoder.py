import struct

import numpy as np
import pytest

from tablechain.encoder.autodiff import Tensor
from tablechain.encoder.model import (
    BLOCKS, D_MODEL, HEAD_DIM, LN_EPS, MAGIC, MANIFEST, NUM_HEADS,
    attention_block, encode, init_params, layer_norm, load_params,
    load_params_file, save_params, save_params_file,
)
from tablechain.encoder.synthetic import synth_corpus
from tablechain.errors import ShapeMismatch
from tablechain.table import load_csv, permute

RNG = np.random.default_rng(515)


# --- independent numpy mirror of the forward pass -----------------------------------

def np_ln(x, gain=1.0, bias=0.0):
    mu = x.mean(axis=-1, keepdims=True)
    c = x - mu
    var = (c * c).mean(axis=-1, keepdims=True)
    return c / np.sqrt(var + LN_EPS) * gain + bias


def np_block(x, y, arrays, block):
    q = x @ arrays[f"{block}_wq"]
    k = y @ arrays[f"{block}_wk"]
    v = y @ arrays[f"{block}_wv"]
    heads = []
    for h in range(NUM_HEADS):
        sl = slice(h * HEAD_DIM, (h + 1) * HEAD_DIM)
        scores = q[:, sl] @ k[:, sl].T / np.sqrt(HEAD_DIM)
        e = np.exp(scores - scores.max(axis=-1, keepdims=True))
        attn = e / e.sum(axis=-1, keepdims=True)
        heads.append(attn @ v[:, sl])
    mixed = np.concatenate(heads, axis=-1) @ arrays[f"{block}_wo"]
    gain, bias = arrays[f"{block}_ln_gain"], arrays[f"{block}_ln_bias"]
    h1 = np_ln(x + mixed, gain, bias)
    ff = (
        np.maximum(h1 @ arrays[f"{block}_w1"] + arrays[f"{block}_b1"], 0.0)
        @ arrays[f"{block}_w2"]
        + arrays[f"{block}_b2"]
    )
    return np_ln(h1 + ff, gain, bias)


@pytest.fixture(scope="module")
def params():
    return init_params(99)


def test_block_matches_numpy_mirror(params):
    x = RNG.normal(size=(5, D_MODEL))
    got = attention_block(Tensor(x), Tensor(x), params, "fuse_1")
    want = np_block(x, x, params.arrays(), "fuse_1")
    np.testing.assert_allclose(got.data, want, atol=1e-12)


def test_cross_attention_matches_mirror(params):
    x = RNG.normal(size=(1, D_MODEL))
    y = RNG.normal(size=(7, D_MODEL))
    got = attention_block(Tensor(x), Tensor(y), params, "pool")
    np.testing.assert_allclose(
        got.data, np_block(x, y, params.arrays(), "pool"), atol=1e-12
    )


def test_singleton_attention_ignores_query_key_weights():
    # softmax over one key is 1.0, so W_q/W_k cannot influence the output
    a, b = init_params(1), init_params(1)
    for name in ("fuse_1_wq", "fuse_1_wk"):
        b.tensors[name].data = RNG.normal(size=(D_MODEL, D_MODEL))
    x = Tensor(RNG.normal(size=(1, D_MODEL)))
    out_a = attention_block(x, x, a, "fuse_1")
    out_b = attention_block(x, x, b, "fuse_1")
    np.testing.assert_array_equal(out_a.data, out_b.data)


def test_permutation_equivariance(params):
    x = RNG.normal(size=(6, D_MODEL))
    perm = [3, 0, 5, 1, 4, 2]
    base = attention_block(Tensor(x), Tensor(x), params, "fuse_2").data
    shuffled = attention_block(
        Tensor(x[perm]), Tensor(x[perm]), params, "fuse_2"
    ).data
    np.testing.assert_allclose(shuffled, base[perm], atol=1e-9)


def test_residual_only_path_is_double_layer_norm():
    p = init_params(4)
    for name in ("fuse_1_wv", "fuse_1_wo", "fuse_1_w2"):
        p.tensors[name].data = np.zeros_like(p.tensors[name].data)
    for name in ("fuse_1_ln_gain",):
        p.tensors[name].data = np.ones_like(p.tensors[name].data)
    for name in ("fuse_1_ln_bias", "fuse_1_b2"):
        p.tensors[name].data = np.zeros_like(p.tensors[name].data)
    x = RNG.normal(size=(3, D_MODEL))
    out = attention_block(Tensor(x), Tensor(x), p, "fuse_1")
    np.testing.assert_allclose(out.data, np_ln(np_ln(x)), atol=1e-12)


def test_block_rejects_wrong_width(params):
    with pytest.raises(ShapeMismatch):
        attention_block(
            Tensor(np.zeros((2, 32))), Tensor(np.zeros((2, 32))),
            params, "fuse_1",
        )


def test_layer_norm_normalizes():
    x = Tensor(RNG.normal(size=(4, D_MODEL)) * 50 + 7)
    out = layer_norm(
        x, Tensor(np.ones(D_MODEL)), Tensor(np.zeros(D_MODEL))
    ).data
    np.testing.assert_allclose(out.mean(axis=-1), np.zeros(4), atol=1e-9)
    np.testing.assert_allclose(out.std(axis=-1), np.ones(4), atol=1e-3)


# --- parameter initialization --------------------------------------------------------

def test_init_params_manifest_and_bounds():
    p = init_params(0)
    assert set(p.tensors) == {name for name, _ in MANIFEST}
    bound = 1.0 / np.sqrt(D_MODEL)
    for name, shape in MANIFEST:
        tensor = p[name]
        assert tensor.shape == shape
        assert tensor.requires_grad
        assert np.all(np.abs(tensor.data) <= bound)


def test_init_params_seeded():
    a, b = init_params(5), init_params(5)
    for name in a.tensors:
        np.testing.assert_array_equal(a[name].data, b[name].data)
    c = init_params(6)
    assert not np.array_equal(a["w_meta_in"].data, c["w_meta_in"].data)


# --- whole-table encoding ------------------------------------------------------------

def test_encode_shapes_and_finiteness(movies, params):
    emb = encode(movies, params)
    assert emb.global_vec.shape == (D_MODEL,)
    assert emb.per_column.shape == (3, D_MODEL)
    assert np.all(np.isfinite(emb.global_vec))
    assert np.all(np.isfinite(emb.per_column))


def test_global_is_not_column_mean(movies, params):
    emb = encode(movies, params)
    assert not np.allclose(emb.global_vec, emb.per_column.mean(axis=0), atol=1e-3)


def test_encode_deterministic(movies):
    a = encode(movies, init_params(7))
    b = encode(movies, init_params(7))
    np.testing.assert_array_equal(a.global_vec, b.global_vec)
    np.testing.assert_array_equal(a.per_column, b.per_column)


def test_row_permutation_bit_identical(movies, params):
    base = encode(movies, params)
    shuffled = encode(permute(movies, row_perm=[4, 2, 0, 5, 1, 3]), params)
    np.testing.assert_array_equal(base.global_vec, shuffled.global_vec)
    np.testing.assert_array_equal(base.per_column, shuffled.per_column)


def test_column_permutation_tolerances(movies, params):
    perm = [2, 0, 1]
    base = encode(movies, params)
    swapped = encode(permute(movies, col_perm=perm), params)
    assert np.max(np.abs(base.global_vec - swapped.global_vec)) < 1e-6
    np.testing.assert_allclose(
        swapped.per_column, base.per_column[perm], atol=1e-6
    )


def test_column_permutation_on_wider_table(params):
    t = synth_corpus(n_tables=1, seed=21)[0]
    rng = np.random.default_rng(3)
    perm = list(rng.permutation(t.n_cols))
    base = encode(t, params)
    swapped = encode(permute(t, col_perm=perm), params)
    assert np.max(np.abs(base.global_vec - swapped.global_vec)) < 1e-6
    np.testing.assert_allclose(
        swapped.per_column, base.per_column[perm], atol=1e-6
    )


# --- binary parameter container -------------------------------------------------------

def total_scalars():
    return sum(int(np.prod(shape)) for _, shape in MANIFEST)


def test_save_layout(params):
    blob = save_params(params)
    assert blob[:4] == MAGIC == b"TGE1"
    assert struct.unpack("<4I", blob[4:20]) == (64, 4, 37, 12)
    assert len(blob) == 20 + 8 * total_scalars()
    first = np.frombuffer(blob[20 : 20 + 37 * 64 * 8], dtype="<f8")
    np.testing.assert_array_equal(
        first.reshape(37, 64), params["w_meta_in"].data
    )


def test_save_is_deterministic(params):
    assert save_params(params) == save_params(params)


def test_round_trip_bit_exact(params, tmp_path):
    path = tmp_path / "enc.tge1"
    save_params_file(params, path)
    loaded = load_params_file(path)
    for name, _ in MANIFEST:
        np.testing.assert_array_equal(loaded[name].data, params[name].data)
        assert loaded[name].data.dtype == np.float64
        assert loaded[name].requires_grad
    # a round-tripped model produces the identical embedding
    t = load_csv(b"a,b\n1,x\n2,y\n")
    np.testing.assert_array_equal(
        encode(t, params).global_vec, encode(t, loaded).global_vec
    )


def test_load_rejects_bad_magic(params):
    blob = save_params(params)
    with pytest.raises(ValueError, match="magic"):
        load_params(b"XGE1" + blob[4:])


def test_load_rejects_unsupported_dims(params):
    blob = save_params(params)
    header = MAGIC + struct.pack("<4I", 32, 4, 37, 12)
    with pytest.raises(ValueError, match="dimensions"):
        load_params(header + blob[20:])


def test_load_rejects_truncation(params):
    blob = save_params(params)
    with pytest.raises(ValueError, match="truncated"):
        load_params(blob[:-8])


def test_load_rejects_trailing_bytes(params):
    blob = save_params(params)
    with pytest.raises(ValueError, match="trailing"):
        load_params(blob + b"\x00" * 8)


def test_blocks_constant():
    assert BLOCKS == ("meta_1", "fuse_1", "fuse_2", "pool")
