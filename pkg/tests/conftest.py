"""Shared fixtures and fixture-building helpers for the test suite."""

import math

import numpy as np
import pytest

from smctrack import (
    Pose,
    PredictorConfig,
    PredictorModel,
    init_model,
)
from smctrack.predictor import _param_shapes


def make_pose(xy, visible=None, scale=80.0, score=1.0):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if visible is None:
        visible = np.ones(len(xy), dtype=bool)
    return Pose(xy=xy, visible=visible, scale=scale, score=score)


def grid_pose(root, num_keypoints, spread=20.0, scale=80.0, score=1.0):
    """Deterministic rigid pose: keypoint i offset (spread*i, -spread*i) from root."""
    root = np.asarray(root, dtype=float)
    offs = np.arange(num_keypoints)[:, None] * np.array([spread, -spread])
    return make_pose(root + offs, scale=scale, score=score)


def constant_predictor(
    history_len=10,
    mean_offset=(0.0, 0.0),
    sigma_norm=0.025,
    dropout_rate=0.0,
    hidden_size=8,
    fc_size=6,
    seed=0,
):
    """A predictor whose output head is pinned to a constant.

    Zeroing the last layer's weights makes every forward pass emit exactly
    ``mean_offset`` (in scale units) with per-axis sigma ``sigma_norm * scale``,
    regardless of the history. Useful when a test needs fully predictable
    proposals without training.
    """
    config = PredictorConfig(
        history_len=history_len,
        hidden_size=hidden_size,
        fc_size=fc_size,
        dropout_rate=dropout_rate,
    )
    model = init_model(config, np.random.default_rng(seed))
    model.params["W2"][:] = 0.0
    model.params["b2"][:] = [
        mean_offset[0],
        mean_offset[1],
        2.0 * math.log(sigma_norm),
        2.0 * math.log(sigma_norm),
    ]
    return model


def random_model(config: PredictorConfig, rng, scale=0.4, dtype=np.float64):
    """Model with all parameters drawn i.i.d. uniform, for gradient checks."""
    shapes = _param_shapes(config)
    params = {
        k: rng.uniform(-scale, scale, size=shape).astype(dtype)
        for k, shape in shapes.items()
    }
    return PredictorModel(config=config, params=params)


def random_history(rng, history_len, scale_range=(20.0, 120.0)):
    """Random keypoint history with at least one visible step."""
    from smctrack import KeypointHistory

    visible = rng.random(history_len) < 0.75
    visible[rng.integers(history_len)] = True
    steps = np.zeros((history_len, 3))
    steps[visible, :2] = rng.normal(0.0, 15.0, (int(visible.sum()), 2))
    steps[:, 2] = visible
    return KeypointHistory(
        steps=steps,
        last_visible=rng.uniform(0.0, 500.0, 2),
        scale=float(rng.uniform(*scale_range)),
    )


def finite_difference_grads(model, batch, l2_lambda=0.0, dropout_masks=None, h=1e-5):
    """Central-difference gradient of the training loss, parameter by parameter.

    Independent of the analytic backward pass: only the forward loss is
    evaluated, at theta +/- h per coordinate.
    """
    from smctrack import nll_loss

    grads = {}
    for key, tensor in model.params.items():
        grad = np.zeros_like(tensor, dtype=np.float64)
        flat = tensor.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = nll_loss(model, batch, l2_lambda=l2_lambda, dropout_masks=dropout_masks)
            flat[i] = orig - h
            lo = nll_loss(model, batch, l2_lambda=l2_lambda, dropout_masks=dropout_masks)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        grads[key] = grad
    return grads


def max_grad_relative_error(analytic, numeric):
    """Worst-case elementwise relative disagreement across parameter tensors."""
    worst = 0.0
    for key in analytic:
        a = np.asarray(analytic[key], dtype=np.float64)
        n = np.asarray(numeric[key], dtype=np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
