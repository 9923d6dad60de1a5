"""Pose data types and the object keypoint similarity (OKS) metric.

OKS is the likelihood used throughout the tracker: a per-keypoint Gaussian
falloff of pixel distance, normalized by object scale, averaged over the
keypoints visible in both poses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# COCO per-keypoint falloff constants (twice the per-keypoint sigmas of the
# COCO toolkit), nose .. ankles.
COCO_KAPPAS = (
    0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144, 0.144,
    0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178, 0.178,
)

# Uniform falloff used for synthetic skeletons with a non-COCO keypoint count.
DEFAULT_KAPPA = 0.05


@dataclass(frozen=True)
class Keypoint:
    """A single 2D keypoint in image coordinates."""

    x: float
    y: float
    visible: bool = True
    confidence: float = 1.0


class Pose:
    """Fixed-size keypoint array with object scale and detection score.

    Invisible keypoints are stored as zeros with zero confidence, so two
    poses that agree on the visible set compare equal bit for bit.
    """

    __slots__ = ("xy", "visible", "confidence", "scale", "score")

    def __init__(self, xy, visible, confidence=None, scale=1.0, score=1.0):
        xy = np.array(xy, dtype=np.float32).reshape(-1, 2)
        visible = np.array(visible, dtype=bool).reshape(-1)
        if visible.shape[0] != xy.shape[0]:
            raise ValueError("visible length must match keypoint count")
        if confidence is None:
            confidence = visible.astype(np.float32)
        confidence = np.array(confidence, dtype=np.float32).reshape(-1)
        if confidence.shape[0] != xy.shape[0]:
            raise ValueError("confidence length must match keypoint count")
        xy[~visible] = 0.0
        confidence[~visible] = 0.0
        self.xy = xy
        self.visible = visible
        self.confidence = confidence
        self.scale = float(scale)
        self.score = float(score)

    @property
    def num_keypoints(self) -> int:
        return self.xy.shape[0]

    @property
    def keypoints(self) -> tuple[Keypoint, ...]:
        return tuple(
            Keypoint(float(x), float(y), bool(v), float(c))
            for (x, y), v, c in zip(self.xy, self.visible, self.confidence)
        )

    @classmethod
    def from_keypoints(cls, keypoints: Iterable[Keypoint], scale: float, score: float = 1.0) -> "Pose":
        kps = list(keypoints)
        return cls(
            xy=[(k.x, k.y) for k in kps],
            visible=[k.visible for k in kps],
            confidence=[k.confidence for k in kps],
            scale=scale,
            score=score,
        )

    @classmethod
    def invisible(cls, num_keypoints: int) -> "Pose":
        """All-invisible placeholder (zero fill), scale 0."""
        return cls(
            xy=np.zeros((num_keypoints, 2), dtype=np.float32),
            visible=np.zeros(num_keypoints, dtype=bool),
            scale=0.0,
            score=0.0,
        )

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (
            np.array_equal(self.xy, other.xy)
            and np.array_equal(self.visible, other.visible)
            and np.array_equal(self.confidence, other.confidence)
            and self.scale == other.scale
            and self.score == other.score
        )

    def __repr__(self):
        return f"Pose(K={self.num_keypoints}, visible={int(self.visible.sum())}, scale={self.scale:.1f})"


@dataclass(frozen=True)
class OksParams:
    """Per-keypoint falloff constants and the scale conventions.

    ``scale_floor`` guards against degenerate boxes. By default the first
    argument's scale (the detection's) normalizes the distances; setting
    ``use_max_scale`` takes the larger of both poses' scales instead.
    """

    kappas: np.ndarray
    scale_floor: float = 1.0
    use_max_scale: bool = False

    def __post_init__(self):
        kappas = np.asarray(self.kappas, dtype=np.float64).reshape(-1)
        if not np.all(kappas > 0):
            raise ValueError("kappas must be positive")
        if self.scale_floor <= 0:
            raise ValueError("scale_floor must be positive")
        object.__setattr__(self, "kappas", kappas)

    @classmethod
    def default_for(cls, num_keypoints: int) -> "OksParams":
        if num_keypoints == len(COCO_KAPPAS):
            return cls(kappas=np.array(COCO_KAPPAS))
        return cls(kappas=np.full(num_keypoints, DEFAULT_KAPPA))


def oks(a: Pose, b: Pose, params: OksParams | None = None) -> float:
    """Object keypoint similarity between two poses, in [0, 1].

    Mean over jointly visible keypoints i of exp(-d_i^2 / (2 s^2 kappa_i^2)),
    with d_i the Euclidean distance and s the (floored) reference scale.
    Keypoints visible in only one pose are skipped. Returns 0.0 when no
    keypoint is visible in both (unmatched candidate, not an error).
    """
    if a.num_keypoints != b.num_keypoints:
        raise ValueError(
            f"keypoint count mismatch: {a.num_keypoints} vs {b.num_keypoints}"
        )
    if params is None:
        params = OksParams.default_for(a.num_keypoints)
    grid = oks_grid(
        a.xy[None], a.visible[None], np.array([a.scale]),
        b.xy[None], b.visible[None], params,
        b_scale=np.array([b.scale]),
    )
    return float(grid[0, 0])


def oks_grid(
    a_xy: np.ndarray,
    a_vis: np.ndarray,
    a_scale: np.ndarray,
    b_xy: np.ndarray,
    b_vis: np.ndarray,
    params: OksParams,
    b_scale: np.ndarray | None = None,
) -> np.ndarray:
    """All-pairs OKS between two pose batches.

    a_xy: (C, K, 2), a_vis: (C, K), a_scale: (C,); b_* likewise with M rows.
    Returns a (C, M) array. The scale of the ``a`` side normalizes unless
    ``params.use_max_scale`` and ``b_scale`` are both given.
    """
    a_xy = np.asarray(a_xy, dtype=np.float64)
    b_xy = np.asarray(b_xy, dtype=np.float64)
    if a_xy.shape[1] != b_xy.shape[1]:
        raise ValueError("keypoint count mismatch between batches")
    d2 = ((a_xy[:, None] - b_xy[None]) ** 2).sum(axis=-1)  # (C, M, K)
    joint = a_vis[:, None, :] & b_vis[None, :, :]

    s = np.maximum(np.asarray(a_scale, dtype=np.float64), params.scale_floor)
    if params.use_max_scale and b_scale is not None:
        s = np.maximum(s[:, None], np.asarray(b_scale, dtype=np.float64)[None, :])
        s2 = (s ** 2)[:, :, None]
    else:
        s2 = (s ** 2)[:, None, None]

    falloff = np.exp(-d2 / (2.0 * s2 * params.kappas ** 2))
    num = np.where(joint, falloff, 0.0).sum(axis=-1)
    den = joint.sum(axis=-1)
    return np.where(den > 0, num / np.maximum(den, 1), 0.0)
