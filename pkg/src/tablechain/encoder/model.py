"""Cascaded set-attention table encoder.

Columns are set elements. The metadata branch runs self-attention over name
and type features; its output conditions the numeric branch, which fuses in
the 12 distribution slots and runs two more self-attention blocks. A learned
seed vector then pools the column set into one global embedding through
cross-attention, so the output does not depend on column count.

Parameters serialize to a small binary container: magic "TGE1", four
little-endian u32 header fields (d_model, heads, meta dim, numeric dim),
then each tensor's float64 values row-major in the fixed manifest order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import ShapeMismatch
from ..table import Table
from .autodiff import (
    Tensor, concat_last, matmul, mean_last, relu, slice_last, softmax_last,
    sqrt, transpose,
)
from .features import META_DIM, NUMERIC_DIM, feature_matrices

D_MODEL = 64
NUM_HEADS = 4
HEAD_DIM = D_MODEL // NUM_HEADS
FF_DIM = 2 * D_MODEL
LN_EPS = 1e-6

BLOCKS = ("meta_1", "fuse_1", "fuse_2", "pool")

MAGIC = b"TGE1"


def _block_entries(name: str) -> list[tuple[str, tuple[int, ...]]]:
    return [
        (f"{name}_wq", (D_MODEL, D_MODEL)),
        (f"{name}_wk", (D_MODEL, D_MODEL)),
        (f"{name}_wv", (D_MODEL, D_MODEL)),
        (f"{name}_wo", (D_MODEL, D_MODEL)),
        (f"{name}_ln_gain", (D_MODEL,)),
        (f"{name}_ln_bias", (D_MODEL,)),
        (f"{name}_w1", (D_MODEL, FF_DIM)),
        (f"{name}_b1", (FF_DIM,)),
        (f"{name}_w2", (FF_DIM, D_MODEL)),
        (f"{name}_b2", (D_MODEL,)),
    ]


MANIFEST: tuple[tuple[str, tuple[int, ...]], ...] = tuple(
    [
        ("w_meta_in", (META_DIM, D_MODEL)),
        ("w_num_in", (D_MODEL + NUMERIC_DIM, D_MODEL)),
    ]
    + [entry for block in BLOCKS for entry in _block_entries(block)]
    + [
        ("pool_seed", (1, D_MODEL)),
        ("mask_token", (NUMERIC_DIM,)),
        ("w_r", (D_MODEL, NUMERIC_DIM)),
        ("b_r", (NUMERIC_DIM,)),
    ]
)


@dataclass(eq=False)
class EncoderParams:
    tensors: dict[str, Tensor]

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def values(self) -> Iterable[Tensor]:
        return self.tensors.values()

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.tensors.items()}


def init_params(seed: int) -> EncoderParams:
    """Seeded uniform(-1/sqrt(d), 1/sqrt(d)) fill, in manifest order."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(D_MODEL)
    tensors = {
        name: Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)
        for name, shape in MANIFEST
    }
    return EncoderParams(tensors)


def _check_2d(x: Tensor, width: int, what: str) -> None:
    if x.data.ndim != 2 or x.data.shape[1] != width:
        raise ShapeMismatch(("n", width), tuple(x.data.shape))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    mu = mean_last(x)
    centered = x - mu
    var = mean_last(centered * centered)
    return centered / sqrt(var + LN_EPS) * gain + bias


def attention_block(x: Tensor, y: Tensor, params: EncoderParams, block: str) -> Tensor:
    """out = LN(h + FF(h)) where h = LN(x + MultiHead(x, y, y)).

    One gain/bias pair per block serves both normalization sites.
    """
    _check_2d(x, D_MODEL, "queries")
    _check_2d(y, D_MODEL, "keys")
    q = matmul(x, params[f"{block}_wq"])
    k = matmul(y, params[f"{block}_wk"])
    v = matmul(y, params[f"{block}_wv"])
    scale = float(np.sqrt(HEAD_DIM))
    heads = []
    for h in range(NUM_HEADS):
        lo, hi = h * HEAD_DIM, (h + 1) * HEAD_DIM
        qh = slice_last(q, lo, hi)
        kh = slice_last(k, lo, hi)
        vh = slice_last(v, lo, hi)
        scores = matmul(qh, transpose(kh)) / scale
        heads.append(matmul(softmax_last(scores), vh))
    mixed = matmul(concat_last(heads), params[f"{block}_wo"])
    gain = params[f"{block}_ln_gain"]
    bias = params[f"{block}_ln_bias"]
    h1 = layer_norm(x + mixed, gain, bias)
    ff = matmul(relu(matmul(h1, params[f"{block}_w1"]) + params[f"{block}_b1"]),
                params[f"{block}_w2"]) + params[f"{block}_b2"]
    return layer_norm(h1 + ff, gain, bias)


@dataclass(frozen=True, eq=False)
class TableEmbedding:
    global_vec: np.ndarray     # (64,)
    per_column: np.ndarray     # (n_cols, 64)


def forward(meta: Tensor, numeric: Tensor, params: EncoderParams) -> tuple[Tensor, Tensor]:
    """Column representations and global vector, as graph nodes."""
    m0 = matmul(meta, params["w_meta_in"])
    m1 = attention_block(m0, m0, params, "meta_1")
    z0 = matmul(concat_last([m1, numeric]), params["w_num_in"])
    z = attention_block(z0, z0, params, "fuse_1")
    z = attention_block(z, z, params, "fuse_2")
    pooled = attention_block(params["pool_seed"], z, params, "pool")
    return z, pooled


def encode(t: Table, params: EncoderParams) -> TableEmbedding:
    meta, numeric = feature_matrices(t)
    z, pooled = forward(Tensor(meta), Tensor(numeric), params)
    return TableEmbedding(pooled.data[0].copy(), z.data.copy())


# --- serialization --------------------------------------------------------------

def save_params(params: EncoderParams) -> bytes:
    header = MAGIC + struct.pack("<4I", D_MODEL, NUM_HEADS, META_DIM, NUMERIC_DIM)
    chunks = [header]
    for name, shape in MANIFEST:
        arr = params[name].data
        if tuple(arr.shape) != shape:
            raise ShapeMismatch(shape, tuple(arr.shape))
        chunks.append(arr.astype("<f8").tobytes(order="C"))
    return b"".join(chunks)


def save_params_file(params: EncoderParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_params(params))


def load_params(blob: bytes) -> EncoderParams:
    if blob[:4] != MAGIC:
        raise ValueError("not an encoder parameter file (bad magic)")
    d, heads, meta_dim, num_dim = struct.unpack_from("<4I", blob, 4)
    if (d, heads, meta_dim, num_dim) != (D_MODEL, NUM_HEADS, META_DIM, NUMERIC_DIM):
        raise ValueError(
            f"unsupported dimensions {(d, heads, meta_dim, num_dim)!r}"
        )
    offset = 4 + 16
    tensors: dict[str, Tensor] = {}
    for name, shape in MANIFEST:
        count = int(np.prod(shape))
        end = offset + count * 8
        if end > len(blob):
            raise ValueError("parameter file truncated")
        arr = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape)
        tensors[name] = Tensor(arr.copy(), requires_grad=True)
        offset = end
    if offset != len(blob):
        raise ValueError("trailing bytes after parameters")
    return EncoderParams(tensors)


def load_params_file(path) -> EncoderParams:
    with open(path, "rb") as fh:
        return load_params(fh.read())
