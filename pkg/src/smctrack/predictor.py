"""Probabilistic per-keypoint pose predictor.

A stateless LSTM is unrolled over a fixed L-step history and feeds a small
fully-connected head that outputs a diagonal Gaussian over the next step:
mean displacement from the last visible coordinate plus a per-axis
log-variance. Epistemic uncertainty comes from Monte-Carlo dropout on the
head's hidden layer (kept active at inference on request); aleatoric
uncertainty is the predicted variance itself. Training minimizes the
heteroscedastic Gaussian negative log-likelihood with L2 regularization,
using hand-rolled backpropagation through time and Adam updates.

Coordinate conventions: histories carry pixel offsets from the keypoint's
last visible coordinate; the network consumes offsets divided by the pose
scale plus a visibility bit, and its outputs are de-normalized by the same
scale. Loss computations stay in normalized space, so the log-determinant
of the covariance is the sum of the two log-variance outputs directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INPUT_SIZE = 3  # (dx/scale, dy/scale, visible)
OUTPUT_SIZE = 4  # (mean dx, mean dy, log-var x, log-var y)
SIGMA_FLOOR = 1e-3  # pixels

PARAM_KEYS = ("W_x", "W_h", "b", "W1", "b1", "W2", "b2")

MODEL_FORMAT = "smctrack-model"
MODEL_VERSION = 1


class DivergenceError(RuntimeError):
    """Model produced non-finite activations or loss."""


@dataclass(frozen=True)
class PredictorConfig:
    history_len: int = 10
    hidden_size: int = 64
    fc_size: int = 40
    dropout_rate: float = 0.3
    leak_slope: float = 0.01

    def __post_init__(self):
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.hidden_size < 1 or self.fc_size < 1:
            raise ValueError("layer sizes must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.leak_slope <= 0.0:
            raise ValueError("leak_slope must be positive")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 30
    l2_lambda: float = 1e-4
    epochs: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.l2_lambda < 0.0:
            raise ValueError("l2_lambda must be >= 0")


@dataclass
class PredictorModel:
    config: PredictorConfig
    params: dict[str, np.ndarray]

    @property
    def dtype(self):
        return self.params["W_x"].dtype

    @property
    def dropout_rate(self) -> float:
        return self.config.dropout_rate

    @property
    def leak_slope(self) -> float:
        return self.config.leak_slope

    def copy(self) -> "PredictorModel":
        return PredictorModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def astype(self, dtype) -> "PredictorModel":
        return PredictorModel(
            self.config, {k: v.astype(dtype) for k, v in self.params.items()}
        )

    def num_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def validate(self) -> None:
        expected = _param_shapes(self.config)
        for key in PARAM_KEYS:
            if key not in self.params:
                raise ValueError(f"missing parameter tensor {key}")
            if self.params[key].shape != expected[key]:
                raise ValueError(
                    f"parameter {key} has shape {self.params[key].shape}, "
                    f"expected {expected[key]}"
                )
            if not np.isfinite(self.params[key]).all():
                raise DivergenceError(f"parameter {key} contains non-finite values")


def _param_shapes(config: PredictorConfig) -> dict[str, tuple]:
    h, f = config.hidden_size, config.fc_size
    return {
        "W_x": (INPUT_SIZE, 4 * h),
        "W_h": (h, 4 * h),
        "b": (4 * h,),
        "W1": (h, f),
        "b1": (f,),
        "W2": (f, OUTPUT_SIZE),
        "b2": (OUTPUT_SIZE,),
    }


def init_model(
    config: PredictorConfig, rng: np.random.Generator, dtype=np.float32
) -> PredictorModel:
    """Uniform +/- 1/sqrt(fan-in) weights, zero biases, forget-gate bias 1."""
    h = config.hidden_size
    shapes = _param_shapes(config)

    def uniform(shape, fan_in):
        k = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-k, k, size=shape).astype(dtype)

    params = {
        "W_x": uniform(shapes["W_x"], INPUT_SIZE),
        "W_h": uniform(shapes["W_h"], h),
        "b": np.zeros(shapes["b"], dtype=dtype),
        "W1": uniform(shapes["W1"], h),
        "b1": np.zeros(shapes["b1"], dtype=dtype),
        "W2": uniform(shapes["W2"], config.fc_size),
        "b2": np.zeros(shapes["b2"], dtype=dtype),
    }
    # gate layout along the 4H axis is (input, forget, cell, output)
    params["b"][h : 2 * h] = 1.0
    return PredictorModel(config=config, params=params)


@dataclass
class KeypointHistory:
    """L-step history of one keypoint: pixel offsets from its last visible
    coordinate, a visibility bit per step, and the pose scale used for
    normalization. Invisible steps carry (0, 0, 0)."""

    steps: np.ndarray  # (L, 3) float: dx, dy, visible
    last_visible: np.ndarray  # (2,) absolute pixels
    scale: float

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=np.float64)
        self.last_visible = np.asarray(self.last_visible, dtype=np.float64)
        if self.steps.ndim != 2 or self.steps.shape[1] != 3:
            raise ValueError("steps must have shape (L, 3)")
        vis = self.steps[:, 2] != 0.0
        if not vis.any():
            raise ValueError("history needs at least one visible step")
        if np.any(self.steps[~vis, :2] != 0.0):
            raise ValueError("invisible steps must carry zero offsets")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    @classmethod
    def from_track(
        cls, xy: np.ndarray, visible: np.ndarray, scale: float
    ) -> "KeypointHistory":
        """Build from absolute per-step coordinates (L, 2) and visibility (L,)."""
        xy = np.asarray(xy, dtype=np.float64)
        visible = np.asarray(visible, dtype=bool)
        if not visible.any():
            raise ValueError("history needs at least one visible step")
        anchor = xy[np.flatnonzero(visible)[-1]]
        steps = np.zeros((len(xy), 3))
        steps[visible, :2] = xy[visible] - anchor
        steps[:, 2] = visible
        return cls(steps=steps, last_visible=anchor, scale=float(scale))


@dataclass(frozen=True)
class GaussianPrediction:
    """Diagonal Gaussian over the next offset from ``last_visible``, pixels."""

    mean: np.ndarray  # (2,)
    sigma: np.ndarray  # (2,) strictly positive

    def __post_init__(self):
        if not (np.isfinite(self.mean).all() and np.isfinite(self.sigma).all()):
            raise DivergenceError("non-finite prediction")
        if not (np.asarray(self.sigma) > 0).all():
            raise ValueError("sigma must be strictly positive")


def _sigmoid(x):
    # callers silence overflow; exp saturates to the correct limit (0 or 1)
    return 1.0 / (1.0 + np.exp(-x))


def encode_batch(xy: np.ndarray, visible: np.ndarray, scales: np.ndarray):
    """Encode a batch of pose-history queues into network inputs.

    xy (P, L, K, 2) absolute pixels, visible (P, L, K) bool, scales (P,).
    Returns (features (P, K, L, 3), anchors (P, K, 2), ok (P, K)) where ok
    marks keypoints with at least one visible step; rows with ok False are
    all-zero and their anchor is (0, 0).
    """
    xy = np.asarray(xy)
    visible = np.asarray(visible, dtype=bool)
    P, L, K, _ = xy.shape
    ok = visible.any(axis=1)
    last = L - 1 - visible[:, ::-1, :].argmax(axis=1)  # junk where never visible
    anchors = xy[np.arange(P)[:, None], last, np.arange(K)[None, :]].copy()
    anchors[~ok] = 0.0
    rel = (xy - anchors[:, None]) / scales[:, None, None, None]
    rel = np.where(visible[..., None], rel, 0.0)
    features = np.concatenate([rel, visible[..., None].astype(rel.dtype)], axis=3)
    return features.transpose(0, 2, 1, 3), anchors, ok


def draw_dropout_masks(model: PredictorModel, batch_size: int, rng: np.random.Generator):
    """Inverted-dropout masks for the FC hidden layer, one row per example."""
    rate = model.config.dropout_rate
    if rate <= 0.0:
        return None
    keep = rng.random((batch_size, model.config.fc_size)) >= rate
    return keep.astype(model.dtype) / model.dtype.type(1.0 - rate)


def _lstm_last_hidden(params: dict, x: np.ndarray) -> np.ndarray:
    """Unroll the cell from zero state over (B, L, 3); return h_L (B, H)."""
    W_x, W_h, b = params["W_x"], params["W_h"], params["b"]
    B, L, _ = x.shape
    H = W_h.shape[0]
    xa = (x.reshape(B * L, -1) @ W_x).reshape(B, L, 4 * H)
    h = np.zeros((B, H), dtype=W_x.dtype)
    c = np.zeros((B, H), dtype=W_x.dtype)
    with np.errstate(over="ignore"):
        for t in range(L):
            a = xa[:, t] + h @ W_h + b
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H : 2 * H])
            g = np.tanh(a[:, 2 * H : 3 * H])
            o = _sigmoid(a[:, 3 * H :])
            c = f * c + i * g
            h = o * np.tanh(c)
    return h


def _head(params: dict, h: np.ndarray, dropout_masks, leak_slope: float) -> np.ndarray:
    z1 = h @ params["W1"] + params["b1"]
    r1 = np.where(z1 > 0, z1, z1 * h.dtype.type(leak_slope))
    if dropout_masks is not None:
        r1 = r1 * dropout_masks
    return r1 @ params["W2"] + params["b2"]


def forward_raw(
    model: PredictorModel,
    x: np.ndarray,
    *,
    dropout_masks: np.ndarray | None = None,
    dedupe: bool = False,
    inverse: np.ndarray | None = None,
) -> np.ndarray:
    """Batched network forward on encoded inputs (B, L, 3) -> (B, 4).

    With dedupe=True, identical input rows share one recurrent unroll; the
    dropout masks still apply per original row (the recurrent part carries
    no dropout, so deduplication cannot change any output).

    With inverse given, x already holds only unique rows and inverse maps
    each reconstructed row to its row in x; the output then has
    len(inverse) rows and dropout_masks align with that reconstruction.
    """
    if dedupe and inverse is not None:
        raise ValueError("dedupe and inverse are mutually exclusive")
    x = np.asarray(x, dtype=model.dtype)
    B = x.shape[0]
    if inverse is not None:
        h = _lstm_last_hidden(model.params, x)[inverse]
    elif dedupe and B > 1:
        flat = np.ascontiguousarray(x.reshape(B, -1))
        uniq, inverse_rows = np.unique(flat, axis=0, return_inverse=True)
        h = _lstm_last_hidden(model.params, uniq.reshape(-1, *x.shape[1:]))[
            inverse_rows
        ]
    else:
        h = _lstm_last_hidden(model.params, x)
    out = _head(model.params, h, dropout_masks, model.config.leak_slope)
    if not np.isfinite(out).all():
        raise DivergenceError("non-finite predictor activations")
    return out


def _history_input(history: KeypointHistory) -> np.ndarray:
    x = history.steps.copy()
    x[:, :2] /= history.scale
    return x


def forward(
    model: PredictorModel,
    history: KeypointHistory,
    mc_dropout: bool,
    rng: np.random.Generator | None = None,
) -> GaussianPrediction:
    """Predict the next offset of one keypoint from its L-step history.

    With mc_dropout a fresh inverted-dropout mask is drawn on the FC hidden
    layer; without it the forward pass is a pure function of (model, history).
    """
    if len(history.steps) != model.config.history_len:
        raise ValueError(
            f"history length {len(history.steps)} != model history_len "
            f"{model.config.history_len}"
        )
    if mc_dropout and rng is None:
        raise ValueError("mc_dropout requires an rng")
    masks = draw_dropout_masks(model, 1, rng) if mc_dropout else None
    out = forward_raw(model, _history_input(history)[None], dropout_masks=masks)[0]
    mean = out[:2].astype(np.float64) * history.scale
    with np.errstate(over="ignore"):
        sigma = np.exp(out[2:].astype(np.float64) / 2.0) * history.scale
    if not np.isfinite(sigma).all():
        raise DivergenceError("non-finite predicted sigma")
    return GaussianPrediction(mean=mean, sigma=np.maximum(sigma, SIGMA_FLOOR))


def sample(pred: GaussianPrediction, rng: np.random.Generator) -> np.ndarray:
    """One draw from the predicted Gaussian; add last_visible for pixels."""
    return pred.mean + pred.sigma * rng.standard_normal(2)


def _stack_batch(batch):
    """(KeypointHistory, target) pairs -> normalized arrays (X, T)."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    L = len(batch[0][0].steps)
    X = np.empty((len(batch), L, INPUT_SIZE), dtype=np.float64)
    T = np.empty((len(batch), 2), dtype=np.float64)
    for i, (hist, target) in enumerate(batch):
        X[i] = _history_input(hist)
        T[i] = np.asarray(target, dtype=np.float64) / hist.scale
    return X, T


def _loss_arrays(model, X, T, l2_lambda, dropout_masks):
    out = forward_raw(model, X, dropout_masks=dropout_masks)
    r = T.astype(model.dtype) - out[:, :2]
    ell = out[:, 2:]
    with np.errstate(over="ignore"):
        inv = np.exp(-ell)
    loss = float(np.sum(r * r * inv) + np.sum(ell))
    if l2_lambda:
        loss += l2_lambda * sum(float(np.sum(v * v)) for v in model.params.values())
    if not np.isfinite(loss):
        raise DivergenceError("non-finite loss")
    return loss


def _loss_grad_arrays(model, X, T, l2_lambda, dropout_masks):
    """Loss plus analytic gradients via backpropagation through time."""
    p = model.params
    dtype = model.dtype
    x = np.asarray(X, dtype=dtype)
    B, L, D = x.shape
    H = p["W_h"].shape[0]
    slope = dtype.type(model.config.leak_slope)

    # forward with cache
    xa = (x.reshape(B * L, D) @ p["W_x"]).reshape(B, L, 4 * H)
    hs = np.zeros((L + 1, B, H), dtype=dtype)
    cs = np.zeros((L + 1, B, H), dtype=dtype)
    gates = np.empty((L, B, 4 * H), dtype=dtype)
    tcs = np.empty((L, B, H), dtype=dtype)
    with np.errstate(over="ignore"):
        for t in range(L):
            a = xa[:, t] + hs[t] @ p["W_h"] + p["b"]
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H : 2 * H])
            g = np.tanh(a[:, 2 * H : 3 * H])
            o = _sigmoid(a[:, 3 * H :])
            gates[t] = np.concatenate([i, f, g, o], axis=1)
            cs[t + 1] = f * cs[t] + i * g
            tcs[t] = np.tanh(cs[t + 1])
            hs[t + 1] = o * tcs[t]

    hL = hs[L]
    z1 = hL @ p["W1"] + p["b1"]
    r1 = np.where(z1 > 0, z1, z1 * slope)
    d1 = r1 if dropout_masks is None else r1 * dropout_masks
    out = d1 @ p["W2"] + p["b2"]
    if not np.isfinite(out).all():
        raise DivergenceError("non-finite predictor activations")

    r = np.asarray(T, dtype=dtype) - out[:, :2]
    ell = out[:, 2:]
    with np.errstate(over="ignore"):
        inv = np.exp(-ell)
    loss = float(np.sum(r * r * inv) + np.sum(ell))
    if not np.isfinite(loss):
        raise DivergenceError("non-finite loss")

    # backward through the head
    dout = np.empty((B, OUTPUT_SIZE), dtype=dtype)
    dout[:, :2] = -2.0 * r * inv
    dout[:, 2:] = 1.0 - r * r * inv
    grads = {}
    grads["W2"] = d1.T @ dout
    grads["b2"] = dout.sum(axis=0)
    dd1 = dout @ p["W2"].T
    dr1 = dd1 if dropout_masks is None else dd1 * dropout_masks
    dz1 = dr1 * np.where(z1 > 0, dtype.type(1.0), slope)
    grads["W1"] = hL.T @ dz1
    grads["b1"] = dz1.sum(axis=0)

    # backprop through time
    dh = dz1 @ p["W1"].T
    dc = np.zeros((B, H), dtype=dtype)
    dxa = np.empty((B, L, 4 * H), dtype=dtype)
    dW_h = np.zeros_like(p["W_h"])
    db = np.zeros_like(p["b"])
    for t in range(L - 1, -1, -1):
        i = gates[t][:, :H]
        f = gates[t][:, H : 2 * H]
        g = gates[t][:, 2 * H : 3 * H]
        o = gates[t][:, 3 * H :]
        tc = tcs[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * cs[t] * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dxa[:, t] = da
        dW_h += hs[t].T @ da
        db += da.sum(axis=0)
        dh = da @ p["W_h"].T
        dc = dc * f
    grads["W_h"] = dW_h
    grads["b"] = db
    grads["W_x"] = x.reshape(B * L, D).T @ dxa.reshape(B * L, 4 * H)

    if l2_lambda:
        lam = dtype.type(l2_lambda)
        for key in PARAM_KEYS:
            loss += float(l2_lambda * np.sum(p[key] * p[key]))
            grads[key] = grads[key] + 2.0 * lam * p[key]
    if not np.isfinite(loss):
        raise DivergenceError("non-finite loss")
    return loss, grads


def nll_loss(
    model: PredictorModel,
    batch,
    *,
    l2_lambda: float = 0.0,
    dropout_masks: np.ndarray | None = None,
) -> float:
    """Heteroscedastic Gaussian negative log-likelihood over a batch.

    batch is a sequence of (KeypointHistory, target-offset) pairs; targets
    are pixel offsets from the history's last visible coordinate. Returns
    sum_i [ (t_i - mu_i)^T Sigma_i^-1 (t_i - mu_i) + log|Sigma_i| ]
    + l2_lambda * ||params||^2, evaluated in scale-normalized space so
    log|Sigma_i| is the sum of the two log-variance outputs.
    """
    X, T = _stack_batch(batch)
    return _loss_arrays(model, X, T, l2_lambda, dropout_masks)


def nll_loss_grad(
    model: PredictorModel,
    batch,
    *,
    l2_lambda: float = 0.0,
    dropout_masks: np.ndarray | None = None,
):
    """nll_loss plus its analytic gradient for every parameter tensor."""
    X, T = _stack_batch(batch)
    return _loss_grad_arrays(model, X, T, l2_lambda, dropout_masks)


def train(
    dataset,
    config: TrainConfig,
    *,
    model_config: PredictorConfig | None = None,
    initial: PredictorModel | None = None,
):
    """Mini-batch Adam on the NLL loss; returns (model, per-epoch loss trace).

    The trace records the mean per-sample objective of each epoch. On
    divergence (non-finite loss) training aborts and the parameters revert
    to the last finished epoch, leaving the trace truncated at that epoch.
    """
    rng = np.random.default_rng(config.seed)
    if initial is not None:
        model = initial.copy()
    else:
        model = init_model(model_config or PredictorConfig(), rng)
    model.validate()
    if config.epochs == 0:
        return model, []
    if len(dataset) == 0:
        raise ValueError("dataset must be non-empty")

    X, T = _stack_batch(dataset)
    X = X.astype(model.dtype)
    T = T.astype(model.dtype)
    n = len(dataset)
    b1, b2, eps = config.beta1, config.beta2, config.adam_eps
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(p) for k, p in model.params.items()}
    step = 0
    trace: list[float] = []
    checkpoint = {k: p.copy() for k, p in model.params.items()}

    for _ in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            masks = draw_dropout_masks(model, len(idx), rng)
            try:
                loss, grads = _loss_grad_arrays(
                    model, X[idx], T[idx], config.l2_lambda, masks
                )
            except DivergenceError:
                model.params = checkpoint
                return model, trace
            epoch_loss += loss
            step += 1
            bc1 = 1.0 - b1**step
            bc2 = 1.0 - b2**step
            for key in PARAM_KEYS:
                g = grads[key]
                m[key] = b1 * m[key] + (1.0 - b1) * g
                v[key] = b2 * v[key] + (1.0 - b2) * g * g
                model.params[key] = model.params[key] - config.learning_rate * (
                    m[key] / bc1
                ) / (np.sqrt(v[key] / bc2) + eps)
        trace.append(epoch_loss / n)
        checkpoint = {k: p.copy() for k, p in model.params.items()}
    return model, trace


def build_training_set(stream, history_len: int):
    """Extract (KeypointHistory, target-offset) pairs from a tracked stream.

    For every track, keypoint, and frame index t in [history_len, T) where
    the keypoint is visible, the pair covers the window [t - history_len, t)
    with frames where the track is absent zero-filled as invisible steps.
    Windows with no visible step for the keypoint are skipped. The history
    scale is the scale of the window's most recent present pose.
    """
    if not stream.has_track_ids:
        raise ValueError("training stream must carry track ids")
    K = stream.meta.num_keypoints
    T_len = len(stream.frames)
    pairs = []
    track_ids = sorted(
        {tid for frame in stream.frames for tid in (frame.track_ids or [])}
    )
    for tid in track_ids:
        xy = np.zeros((T_len, K, 2))
        vis = np.zeros((T_len, K), dtype=bool)
        scales = np.zeros(T_len)
        for ti, frame in enumerate(stream.frames):
            if tid in frame.track_ids:
                pose = frame.poses[frame.track_ids.index(tid)]
                xy[ti] = pose.xy
                vis[ti] = pose.visible
                scales[ti] = pose.scale
        present = scales > 0
        for t in range(history_len, T_len):
            w = slice(t - history_len, t)
            w_present = np.flatnonzero(present[w])
            if len(w_present) == 0:
                continue
            hist_scale = float(scales[w][w_present[-1]])
            for k in range(K):
                if not vis[t, k]:
                    continue
                w_vis = vis[w, k]
                if not w_vis.any():
                    continue
                anchor = xy[w, k][np.flatnonzero(w_vis)[-1]]
                steps = np.zeros((history_len, 3))
                steps[w_vis, :2] = xy[w, k][w_vis] - anchor
                steps[:, 2] = w_vis
                hist = KeypointHistory(
                    steps=steps, last_visible=anchor, scale=hist_scale
                )
                pairs.append((hist, xy[t, k] - anchor))
    return pairs


def save_model(model: PredictorModel, path: str | Path, extra: dict | None = None) -> None:
    """Single-file snapshot: JSON header plus little-endian float32 tensors."""
    model.validate()
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": {
            "history_len": model.config.history_len,
            "hidden_size": model.config.hidden_size,
            "fc_size": model.config.fc_size,
            "dropout_rate": model.config.dropout_rate,
            "leak_slope": model.config.leak_slope,
        },
        "extra": extra or {},
    }
    arrays = {k: v.astype("<f4") for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_model(path: str | Path) -> PredictorModel:
    with np.load(path) as data:
        if "__meta__" not in data:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        meta = json.loads(str(data["__meta__"][()]))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        if meta.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {meta.get('version')}")
        config = PredictorConfig(**meta["config"])
        params = {k: data[k].astype(np.float32, copy=False) for k in PARAM_KEYS}
    model = PredictorModel(config=config, params=params)
    model.validate()
    return model
