"""Per-track sequential Monte Carlo machinery.

A particle is an L-step queue of poses (a hypothesized recent trajectory).
Proposal runs the probabilistic predictor per particle and keypoint with
Monte-Carlo dropout and samples from the predicted Gaussians; weighting
uses the eliteness rule (top fraction by OKS get equal weight, rest zero);
resampling is i.i.d. categorical; selection probabilistically replaces a
particle's history with the track's observation history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose
from .predictor import (
    DivergenceError,
    PredictorModel,
    draw_dropout_masks,
    encode_batch,
    forward_raw,
)


@dataclass(frozen=True)
class SmcConfig:
    num_particles: int = 300
    history_len: int = 10
    alpha: float = 0.45
    eliteness: float = 0.15
    sigma_floor: float = 1e-3
    sigma_ceiling: float = 10.0
    mc_dropout: bool = True
    fixed_sigma: float | None = None
    systematic_resampling: bool = False

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError("num_particles must be >= 1")
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 < self.eliteness <= 1.0:
            raise ValueError("eliteness must be in (0, 1]")
        if self.sigma_floor <= 0.0:
            raise ValueError("sigma_floor must be positive")
        if self.sigma_ceiling <= 0.0:
            raise ValueError("sigma_ceiling must be positive")
        if self.fixed_sigma is not None and self.fixed_sigma < 0.0:
            raise ValueError("fixed_sigma must be >= 0")


class PoseBatch:
    """Struct-of-arrays view of N same-K poses."""

    __slots__ = ("xy", "visible", "scale")

    def __init__(self, xy, visible, scale):
        self.xy = np.asarray(xy, dtype=np.float32)
        self.visible = np.asarray(visible, dtype=bool)
        self.scale = np.asarray(scale, dtype=np.float32)
        n, k = self.visible.shape
        if self.xy.shape != (n, k, 2) or self.scale.shape != (n,):
            raise ValueError("inconsistent pose batch shapes")

    def __len__(self):
        return len(self.scale)

    @classmethod
    def from_poses(cls, poses) -> "PoseBatch":
        xy = np.stack([p.xy for p in poses])
        vis = np.stack([p.visible for p in poses])
        scale = np.array([p.scale for p in poses])
        return cls(xy, vis, scale)

    def to_poses(self) -> list[Pose]:
        return [
            Pose(xy=self.xy[i], visible=self.visible[i], scale=float(self.scale[i]))
            for i in range(len(self))
        ]


class PoseQueue:
    """Fixed-length FIFO of poses as arrays; index 0 oldest, -1 newest."""

    __slots__ = ("xy", "visible", "scale")

    def __init__(self, xy, visible, scale):
        self.xy = np.asarray(xy, dtype=np.float32)
        self.visible = np.asarray(visible, dtype=bool)
        self.scale = np.asarray(scale, dtype=np.float32)

    @classmethod
    def from_pose(cls, pose: Pose, history_len: int) -> "PoseQueue":
        k = pose.num_keypoints
        xy = np.zeros((history_len, k, 2), dtype=np.float32)
        visible = np.zeros((history_len, k), dtype=bool)
        scale = np.full(history_len, pose.scale, dtype=np.float32)
        xy[-1] = pose.xy
        visible[-1] = pose.visible
        return cls(xy, visible, scale)

    def push_pose(self, pose: Pose) -> None:
        self.xy = np.concatenate([self.xy[1:], pose.xy[None].astype(np.float32)])
        self.visible = np.concatenate([self.visible[1:], pose.visible[None]])
        self.scale = np.concatenate(
            [self.scale[1:], np.array([pose.scale], dtype=np.float32)]
        )

    def push_invisible(self) -> None:
        k = self.visible.shape[1]
        self.xy = np.concatenate([self.xy[1:], np.zeros((1, k, 2), dtype=np.float32)])
        self.visible = np.concatenate([self.visible[1:], np.zeros((1, k), dtype=bool)])
        # carry the previous scale so the queue keeps a usable normalization
        self.scale = np.concatenate([self.scale[1:], self.scale[-1:]])


class ParticleSet:
    """P pose-history queues with importance weights."""

    __slots__ = ("xy", "visible", "scale", "weights")

    def __init__(self, xy, visible, scale, weights):
        self.xy = np.asarray(xy, dtype=np.float32)
        self.visible = np.asarray(visible, dtype=bool)
        self.scale = np.asarray(scale, dtype=np.float32)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.validate()

    @property
    def num_particles(self) -> int:
        return self.xy.shape[0]

    @property
    def history_len(self) -> int:
        return self.xy.shape[1]

    @property
    def num_keypoints(self) -> int:
        return self.xy.shape[2]

    def validate(self) -> None:
        p, l, k = self.visible.shape
        if self.xy.shape != (p, l, k, 2) or self.scale.shape != (p, l):
            raise ValueError("inconsistent particle array shapes")
        if self.weights.shape != (p,):
            raise ValueError("weights must have one entry per particle")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")

    @classmethod
    def from_pose(cls, pose: Pose, num_particles: int, history_len: int) -> "ParticleSet":
        """All queues start with the pose at the newest slot, invisible fill."""
        k = pose.num_keypoints
        xy = np.zeros((num_particles, history_len, k, 2), dtype=np.float32)
        visible = np.zeros((num_particles, history_len, k), dtype=bool)
        scale = np.full((num_particles, history_len), pose.scale, dtype=np.float32)
        xy[:, -1] = pose.xy
        visible[:, -1] = pose.visible
        weights = np.full(num_particles, 1.0 / num_particles)
        return cls(xy, visible, scale, weights)

    def history_scales(self) -> np.ndarray:
        """Per particle, the scale of the newest step with any visible keypoint."""
        p, l = self.scale.shape
        any_vis = self.visible.any(axis=2)
        has = any_vis.any(axis=1)
        last = l - 1 - any_vis[:, ::-1].argmax(axis=1)
        s = self.scale[np.arange(p), last].copy()
        s[~has] = 1.0
        return s

    def newest_poses(self) -> PoseBatch:
        return PoseBatch(self.xy[:, -1], self.visible[:, -1], self.scale[:, -1])

    def push(self, batch: PoseBatch) -> None:
        """Append one pose per particle, evicting the oldest step."""
        if len(batch) != self.num_particles:
            raise ValueError("batch size must match particle count")
        self.xy = np.concatenate([self.xy[:, 1:], batch.xy[:, None]], axis=1)
        self.visible = np.concatenate(
            [self.visible[:, 1:], batch.visible[:, None]], axis=1
        )
        self.scale = np.concatenate([self.scale[:, 1:], batch.scale[:, None]], axis=1)


def _unique_particles(pset: ParticleSet):
    """First-occurrence dedupe of byte-identical queues: (rep_idx, inverse).

    Resampling and history selection leave most queues as exact copies of a
    few ancestors, so the predictor only needs one unroll per distinct queue.
    """
    p = pset.num_particles
    xyb = np.ascontiguousarray(pset.xy).reshape(p, -1)
    visb = np.ascontiguousarray(pset.visible).reshape(p, -1)
    scb = np.ascontiguousarray(pset.scale).reshape(p, -1)
    seen: dict[bytes, int] = {}
    reps = []
    inverse = np.empty(p, dtype=np.intp)
    for i in range(p):
        key = xyb[i].tobytes() + visb[i].tobytes() + scb[i].tobytes()
        j = seen.get(key)
        if j is None:
            j = len(reps)
            seen[key] = j
            reps.append(i)
        inverse[i] = j
    return np.asarray(reps, dtype=np.intp), inverse


def propose(
    pset: ParticleSet,
    model: PredictorModel,
    rng: np.random.Generator,
    config: SmcConfig,
) -> PoseBatch:
    """One proposed pose per particle from the predictor's Gaussians.

    Per particle and keypoint the predictor runs on that particle's history
    (fresh dropout mask per particle when mc_dropout is on) and one position
    is sampled. Keypoints with no visible step in a queue stay invisible.
    Random draws cover the full particle-by-keypoint batch in row order, so
    the deduplication of identical queues never shifts the random stream.
    """
    if pset.history_len != model.config.history_len:
        raise ValueError("particle history length does not match the model")
    p, k = pset.num_particles, pset.num_keypoints
    scales = pset.history_scales()
    reps, inv = _unique_particles(pset)
    features, anchors_u, ok_u = encode_batch(
        pset.xy[reps], pset.visible[reps], scales[reps]
    )
    x = features.reshape(len(reps) * k, pset.history_len, features.shape[-1])
    masks = draw_dropout_masks(model, p * k, rng) if config.mc_dropout else None
    row_inverse = (inv[:, None] * k + np.arange(k)[None, :]).reshape(-1)
    out = forward_raw(model, x, dropout_masks=masks, inverse=row_inverse)
    anchors = anchors_u[inv]
    ok = ok_u[inv]
    mean = anchors + out[:, :2].reshape(p, k, 2) * scales[:, None, None]
    if config.fixed_sigma is not None:
        sigma = np.full((p, k, 2), config.fixed_sigma)
    else:
        with np.errstate(over="ignore"):
            sigma = np.exp(out[:, 2:].reshape(p, k, 2) / 2.0) * scales[:, None, None]
        if np.isnan(sigma[ok]).any():
            raise DivergenceError("non-finite proposal sigma")
        # ceiling at sigma_ceiling person scales: a particle that far adrift
        # scores zero against any detection regardless, and an unbounded
        # spread would feed back through the queue and overflow within a few
        # dead-reckoned frames
        sigma = np.clip(
            sigma, config.sigma_floor, config.sigma_ceiling * scales[:, None, None]
        )
    z = rng.standard_normal((p, k, 2))
    xy = mean + sigma * z
    xy = np.where(ok[..., None], xy, 0.0)
    return PoseBatch(xy, ok, scales)


def elite_weights(oks_values: np.ndarray, e: float) -> np.ndarray:
    """Top ceil(e*P) particles by OKS get weight 1, rest 0, then normalize.

    Ties at the cutoff break toward the lower particle index. All-zero OKS
    yields uniform weights (the observation carries no information).
    """
    oks = np.asarray(oks_values, dtype=np.float64)
    p = len(oks)
    if p < 1:
        raise ValueError("need at least one particle")
    if not 0.0 < e <= 1.0:
        raise ValueError("eliteness must be in (0, 1]")
    if not np.any(oks > 0.0):
        return np.full(p, 1.0 / p)
    n = math.ceil(e * p)
    order = np.argsort(-oks, kind="stable")
    weights = np.zeros(p)
    weights[order[:n]] = 1.0 / n
    return weights


def resample(
    pset: ParticleSet, rng: np.random.Generator, *, systematic: bool = False
) -> ParticleSet:
    """Draw P queues i.i.d. from Cat(weights); output weights are uniform.

    systematic=True switches to stratified positions over the cumulative
    weights (lower variance, off by default).
    """
    p = pset.num_particles
    if systematic:
        positions = (rng.random() + np.arange(p)) / p
        idx = np.searchsorted(np.cumsum(pset.weights), positions)
        idx = np.minimum(idx, p - 1)
    else:
        idx = rng.choice(p, size=p, p=pset.weights)
    return ParticleSet(
        pset.xy[idx], pset.visible[idx], pset.scale[idx], np.full(p, 1.0 / p)
    )


def select_mixture(
    pset: ParticleSet, observations: PoseQueue, alpha: float, rng: np.random.Generator
) -> ParticleSet:
    """Keep each particle's history with probability alpha, else replace the
    whole queue with the track's observation history."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    p = pset.num_particles
    keep = rng.random(p) < alpha
    xy = pset.xy.copy()
    visible = pset.visible.copy()
    scale = pset.scale.copy()
    xy[~keep] = observations.xy
    visible[~keep] = observations.visible
    scale[~keep] = observations.scale
    return ParticleSet(xy, visible, scale, pset.weights.copy())
