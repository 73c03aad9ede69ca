"""Masked-column pretraining and gradient verification.

The objective hides the numeric descriptor of a seeded random subset of
columns behind a learned mask token (metadata stays visible) and trains the
network to reconstruct the hidden slots through a linear head on the fused
column representations. Loss is the mean squared error over masked slots
only. Optimization is plain Adam; every random draw is seeded, so a run is
reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import NonFiniteLoss, TooFewColumns
from ..table import Table
from .autodiff import Tensor, backward, matmul, sum_all, zero_grads
from .features import NUMERIC_DIM, feature_matrices
from .model import EncoderParams, attention_block, concat_last, init_params

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    learning_rate: float = 1e-3
    mask_frac: float = 0.15
    seed: int = 0
    batch_size: int = 8

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not (0.0 < self.mask_frac < 1.0):
            raise ValueError("mask_frac must lie strictly between 0 and 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass(frozen=True)
class MtmResult:
    loss: float
    masked_idx: tuple[int, ...]


def mask_count(mask_frac: float, n_cols: int) -> int:
    return max(1, round(mask_frac * n_cols))


def _masked_loss(
    meta: np.ndarray,
    numeric: np.ndarray,
    params: EncoderParams,
    seed: int,
    mask_frac: float,
) -> tuple[Tensor, tuple[int, ...]]:
    n_cols = meta.shape[0]
    if n_cols < 2:
        raise TooFewColumns(n_cols, 2)
    m = mask_count(mask_frac, n_cols)
    rng = np.random.default_rng(seed)
    masked = tuple(sorted(int(i) for i in rng.choice(n_cols, size=m, replace=False)))

    indicator = np.zeros((n_cols, 1), dtype=np.float64)
    for i in masked:
        indicator[i, 0] = 1.0
    ind = Tensor(indicator)
    meta_t = Tensor(meta)
    true_t = Tensor(numeric)

    masked_numeric = true_t * (1.0 - ind) + params["mask_token"] * ind
    m0 = matmul(meta_t, params["w_meta_in"])
    m1 = attention_block(m0, m0, params, "meta_1")
    z0 = matmul(concat_last([m1, masked_numeric]), params["w_num_in"])
    z = attention_block(z0, z0, params, "fuse_1")
    z = attention_block(z, z, params, "fuse_2")
    recon = matmul(z, params["w_r"]) + params["b_r"]

    diff = (recon - true_t) * ind
    loss = sum_all(diff * diff) / float(m * NUMERIC_DIM)
    return loss, masked


def mtm_loss(
    t: Table, params: EncoderParams, seed: int, mask_frac: float = 0.15
) -> MtmResult:
    meta, numeric = feature_matrices(t)
    loss, masked = _masked_loss(meta, numeric, params, seed, mask_frac)
    return MtmResult(float(loss.data), masked)


def _mask_seed(base_seed: int, step: int, table_index: int) -> int:
    return (base_seed * 1_000_003 + step * 8191 + table_index) % (2**63)


def train_mtm(
    tables: Sequence[Table],
    cfg: TrainConfig,
    on_step: Optional[Callable[[int, float], None]] = None,
) -> EncoderParams:
    if not tables:
        raise ValueError("training corpus is empty")
    features = [feature_matrices(t) for t in tables]
    for meta, _ in features:
        if meta.shape[0] < 2:
            raise TooFewColumns(meta.shape[0], 2)

    params = init_params(cfg.seed)
    names = list(params.tensors)
    m_state = {n: np.zeros_like(params[n].data) for n in names}
    v_state = {n: np.zeros_like(params[n].data) for n in names}
    batch_rng = np.random.default_rng(cfg.seed + 1)

    for step in range(cfg.steps):
        batch = batch_rng.integers(0, len(tables), size=cfg.batch_size)
        zero_grads(params.values())
        losses = []
        for j in batch:
            meta, numeric = features[int(j)]
            loss, _ = _masked_loss(
                meta, numeric, params,
                _mask_seed(cfg.seed, step, int(j)), cfg.mask_frac,
            )
            losses.append(loss)
        total = losses[0]
        for extra in losses[1:]:
            total = total + extra
        mean_loss = total / float(len(losses))
        loss_value = float(mean_loss.data)
        if not np.isfinite(loss_value):
            raise NonFiniteLoss(step, f"loss={loss_value!r}")
        backward(mean_loss)

        t_adam = step + 1
        bias1 = 1.0 - ADAM_BETA1**t_adam
        bias2 = 1.0 - ADAM_BETA2**t_adam
        for n in names:
            g = params[n].grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteLoss(step, f"non-finite gradient in {n}")
            m_state[n] = ADAM_BETA1 * m_state[n] + (1.0 - ADAM_BETA1) * g
            v_state[n] = ADAM_BETA2 * v_state[n] + (1.0 - ADAM_BETA2) * (g * g)
            m_hat = m_state[n] / bias1
            v_hat = v_state[n] / bias2
            params[n].data = params[n].data - cfg.learning_rate * m_hat / (
                np.sqrt(v_hat) + ADAM_EPS
            )
        if on_step is not None:
            on_step(step, loss_value)
    return params


GradFn = Callable[[EncoderParams, np.ndarray, np.ndarray, int], dict[str, np.ndarray]]


def _analytic_grads(
    params: EncoderParams, meta: np.ndarray, numeric: np.ndarray, seed: int
) -> dict[str, np.ndarray]:
    zero_grads(params.values())
    loss, _ = _masked_loss(meta, numeric, params, seed, 0.15)
    backward(loss)
    return {
        n: (params[n].grad if params[n].grad is not None
            else np.zeros_like(params[n].data))
        for n in params.tensors
    }


def grad_check(
    params: EncoderParams,
    t: Table,
    eps: float = 1e-5,
    samples_per_tensor: int = 3,
    seed: int = 0,
    grad_fn: GradFn = _analytic_grads,
) -> float:
    """Max relative error between backprop and central finite differences.

    Samples a few scalars from every tensor (so each attention block and the
    reconstruction head is covered) and compares d(loss)/d(scalar). The
    ``grad_fn`` hook lets tests inject a deliberately broken gradient.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    meta, numeric = feature_matrices(t)
    analytic = grad_fn(params, meta, numeric, seed)
    rng = np.random.default_rng(1234)
    worst = 0.0
    for name, _ in params.tensors.items():
        flat = params[name].data.reshape(-1)
        n = flat.size
        picks = rng.choice(n, size=min(samples_per_tensor, n), replace=False)
        for idx in picks:
            original = flat[idx]
            flat[idx] = original + eps
            plus, _ = _masked_loss(meta, numeric, params, seed, 0.15)
            flat[idx] = original - eps
            minus, _ = _masked_loss(meta, numeric, params, seed, 0.15)
            flat[idx] = original
            numeric_grad = (float(plus.data) - float(minus.data)) / (2.0 * eps)
            analytic_grad = float(analytic[name].reshape(-1)[idx])
            denom = max(abs(analytic_grad), abs(numeric_grad), 1e-8)
            worst = max(worst, abs(analytic_grad - numeric_grad) / denom)
    return worst
