"""Seeded synthetic multi-person keypoint scenes.

Each person is a root point moving under a smoothed random-walk velocity
inside reflective image bounds, with the remaining keypoints oscillating
around the root at per-keypoint radii, frequencies, and phases. A shared
sinusoidal camera pan shifts everyone. Whole-person occlusion windows
remove a person from both streams for a stretch of frames while the
identity persists. Detections are ground truth plus speed-dependent
Gaussian jitter, with misses, Poisson false positives, and shuffled
per-frame order. Scenes with at least two people are regenerated until a
pair of roots passes within one body scale, so identity-stressing
crossings are guaranteed; the retry count lands in the stream metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import Pose
from .streams import Frame, FrameStream, StreamMeta

_MAX_CROSSING_ATTEMPTS = 200


@dataclass(frozen=True)
class NoiseModel:
    """Detection jitter: sigma = base + speed_gain * |instantaneous speed|."""

    base: float = 0.3
    speed_gain: float = 0.15

    def sigma(self, speed):
        return self.base + self.speed_gain * speed


@dataclass(frozen=True)
class OcclusionModel:
    start_prob: float = 0.01
    duration: tuple[int, int] = (5, 15)

    def __post_init__(self):
        if not 0.0 <= self.start_prob <= 1.0:
            raise ValueError("start_prob must be in [0, 1]")
        if not 1 <= self.duration[0] <= self.duration[1]:
            raise ValueError("duration range must satisfy 1 <= lo <= hi")


@dataclass(frozen=True)
class DetectorModel:
    miss_prob: float = 0.05
    fp_rate: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError("miss_prob must be in [0, 1]")
        if self.fp_rate < 0.0:
            raise ValueError("fp_rate must be >= 0")


@dataclass(frozen=True)
class SceneConfig:
    num_people: int = 4
    num_frames: int = 300
    num_keypoints: int = 17
    image_size: tuple[int, int] = (640, 480)
    speed_range: tuple[float, float] = (1.0, 4.0)
    noise: NoiseModel = field(default_factory=NoiseModel)
    occlusion: OcclusionModel = field(default_factory=OcclusionModel)
    camera_pan: float = 1.0
    detector: DetectorModel = field(default_factory=DetectorModel)
    seed: int = 0

    def __post_init__(self):
        if self.num_people < 1 or self.num_frames < 1 or self.num_keypoints < 1:
            raise ValueError("counts must be >= 1")
        if not 0.0 < self.speed_range[0] <= self.speed_range[1]:
            raise ValueError("speed_range must satisfy 0 < lo <= hi")
        if self.camera_pan < 0.0:
            raise ValueError("camera_pan must be >= 0")


@dataclass
class _SceneData:
    xy: np.ndarray  # (T, N, K, 2) absolute keypoint positions
    present: np.ndarray  # (T, N) person visible this frame
    speeds: np.ndarray  # (T, N, K) per-keypoint instantaneous speed
    scales: np.ndarray  # (N,)
    attempts: int
    min_norm_distance: float
    crossed: bool


def _generate(config: SceneConfig, rng: np.random.Generator) -> tuple:
    w, h = config.image_size
    n, t_len, k = config.num_people, config.num_frames, config.num_keypoints
    scales = rng.uniform(50.0, 110.0, n)
    margin = 0.6 * scales
    rx = rng.uniform(0.12, 0.4, (n, k - 1)) * scales[:, None]
    ry = rng.uniform(0.12, 0.4, (n, k - 1)) * scales[:, None]
    # gait-band keypoint oscillation (periods of roughly 14-80 frames); damp
    # the radii of faster modes so peak oscillation speed is band-independent
    omega = rng.uniform(0.08, 0.45, (n, k - 1))
    damp = 0.15 / np.maximum(omega, 0.15)
    rx *= damp
    ry *= damp
    phase_x = rng.uniform(0.0, 2.0 * math.pi, (n, k - 1))
    phase_y = rng.uniform(0.0, 2.0 * math.pi, (n, k - 1))
    mean_speed = rng.uniform(*config.speed_range, n)
    pos = np.stack(
        [rng.uniform(margin, w - margin), rng.uniform(margin, h - margin)], axis=1
    )
    heading = rng.uniform(0.0, 2.0 * math.pi, n)
    vel = mean_speed[:, None] * np.stack([np.cos(heading), np.sin(heading)], axis=1)
    pan_period = rng.uniform(60.0, 180.0)
    pan_phase = rng.uniform(0.0, 2.0 * math.pi)

    rho = 0.9
    innov = (mean_speed / 1.25) * math.sqrt(1.0 - rho * rho)
    roots = np.empty((t_len, n, 2))
    lo = margin[:, None] * np.ones((1, 2))
    hi = np.stack([w - margin, h - margin], axis=1)
    for t in range(t_len):
        roots[t] = pos
        vel = rho * vel + innov[:, None] * rng.standard_normal((n, 2))
        pan = config.camera_pan * math.sin(2.0 * math.pi * t / pan_period + pan_phase)
        pos = pos + vel + np.array([pan, 0.0])
        # reflective bounds: fold position back and flip the velocity component
        under = pos < lo
        pos = np.where(under, 2.0 * lo - pos, pos)
        over = pos > hi
        pos = np.where(over, 2.0 * hi - pos, pos)
        vel = np.where(under | over, -vel, vel)
        pos = np.clip(pos, lo, hi)

    ts = np.arange(t_len)[:, None, None]
    off_x = rx[None] * np.cos(omega[None] * ts + phase_x[None])
    off_y = ry[None] * np.sin(omega[None] * ts + phase_y[None])
    offsets = np.zeros((t_len, n, k, 2))
    offsets[:, :, 1:, 0] = off_x
    offsets[:, :, 1:, 1] = off_y
    xy = roots[:, :, None, :] + offsets

    present = np.ones((t_len, n), dtype=bool)
    occ = config.occlusion
    for person in range(n):
        remaining = 0
        for t in range(t_len):
            if remaining > 0:
                present[t, person] = False
                remaining -= 1
            elif rng.random() < occ.start_prob:
                remaining = int(rng.integers(occ.duration[0], occ.duration[1] + 1))
                present[t, person] = False
                remaining -= 1

    speeds = np.zeros((t_len, n, k))
    if t_len > 1:
        speeds[1:] = np.linalg.norm(np.diff(xy, axis=0), axis=3)

    return roots, xy, present, speeds, scales


def _scene(config: SceneConfig) -> _SceneData:
    best = None
    for attempt in range(_MAX_CROSSING_ATTEMPTS):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, attempt, 0]))
        roots, xy, present, speeds, scales = _generate(config, rng)
        if config.num_people < 2:
            return _SceneData(xy, present, speeds, scales, attempt + 1, math.inf, False)
        min_norm = math.inf
        for i in range(config.num_people):
            for j in range(i + 1, config.num_people):
                d = float(np.min(np.linalg.norm(roots[:, i] - roots[:, j], axis=1)))
                min_norm = min(min_norm, d / max(scales[i], scales[j]))
        data = _SceneData(
            xy, present, speeds, scales, attempt + 1, float(min_norm), min_norm <= 1.0
        )
        if data.crossed:
            return data
        if best is None or data.min_norm_distance < best.min_norm_distance:
            best = data
    return best


def _meta(config: SceneConfig, data: _SceneData) -> dict:
    return {
        "scene_config": asdict(config),
        "crossing": {
            "attempts": int(data.attempts),
            "min_normalized_root_distance": (
                None if math.isinf(data.min_norm_distance) else data.min_norm_distance
            ),
            "crossed": bool(data.crossed),
        },
    }


def _gt_pose(data: _SceneData, t: int, person: int) -> Pose:
    k = data.xy.shape[2]
    return Pose(
        xy=data.xy[t, person],
        visible=np.ones(k, dtype=bool),
        scale=float(data.scales[person]),
    )


def _jittered_pose(
    data: _SceneData, t: int, person: int, noise: NoiseModel, rng: np.random.Generator
) -> Pose:
    k = data.xy.shape[2]
    sigma = noise.sigma(data.speeds[t, person])
    xy = data.xy[t, person] + sigma[:, None] * rng.standard_normal((k, 2))
    return Pose(xy=xy, visible=np.ones(k, dtype=bool), scale=float(data.scales[person]))


def simulate(config: SceneConfig) -> tuple[FrameStream, FrameStream]:
    """Generate (detections without ids, ground truth with ids)."""
    data = _scene(config)
    t_len, n, k = data.present.shape[0], data.present.shape[1], data.xy.shape[2]
    w, h = config.image_size
    extra = _meta(config, data)
    rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, data.attempts - 1, 1])
    )

    gt_frames = []
    det_frames = []
    for t in range(t_len):
        people = [p for p in range(n) if data.present[t, p]]
        gt_frames.append(
            Frame(
                frame_id=t,
                poses=[_gt_pose(data, t, p) for p in people],
                track_ids=list(people),
            )
        )

        det_poses = []
        for p in people:
            if rng.random() < config.detector.miss_prob:
                continue
            pose = _jittered_pose(data, t, p, config.noise, rng)
            det_poses.append(
                Pose(
                    xy=np.clip(pose.xy, [0.0, 0.0], [w, h]),
                    visible=pose.visible,
                    scale=pose.scale,
                )
            )
        for _ in range(rng.poisson(config.detector.fp_rate)):
            scale = rng.uniform(50.0, 110.0)
            root = np.array(
                [rng.uniform(scale, w - scale), rng.uniform(scale, h - scale)]
            )
            offs = rng.uniform(-0.5 * scale, 0.5 * scale, (k, 2))
            offs[0] = 0.0
            det_poses.append(
                Pose(
                    xy=root + offs,
                    visible=np.ones(k, dtype=bool),
                    scale=scale,
                    score=0.5,
                )
            )
        order = rng.permutation(len(det_poses))
        det_frames.append(
            Frame(frame_id=t, poses=[det_poses[i] for i in order], track_ids=None)
        )

    meta_kwargs = dict(num_keypoints=k, image_size=(w, h))
    detections = FrameStream(
        meta=StreamMeta(**meta_kwargs, extra=extra), frames=det_frames
    )
    ground_truth = FrameStream(
        meta=StreamMeta(**meta_kwargs, extra=extra), frames=gt_frames
    )
    return detections, ground_truth


def training_stream(config: SceneConfig) -> FrameStream:
    """Ground truth with ids whose coordinates carry the detector's
    speed-dependent jitter: predictor training data that reflects what the
    tracker will actually observe. Same trajectories as simulate(config)."""
    data = _scene(config)
    t_len, n = data.present.shape
    rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, data.attempts - 1, 2])
    )
    frames = []
    for t in range(t_len):
        people = [p for p in range(n) if data.present[t, p]]
        frames.append(
            Frame(
                frame_id=t,
                poses=[_jittered_pose(data, t, p, config.noise, rng) for p in people],
                track_ids=list(people),
            )
        )
    meta = StreamMeta(
        num_keypoints=data.xy.shape[2],
        image_size=tuple(config.image_size),
        extra=_meta(config, data),
    )
    return FrameStream(meta=meta, frames=frames)


def true_sigmas(config: SceneConfig) -> np.ndarray:
    """Oracle noise scale per (frame, person, keypoint) for the same scene
    realization that simulate and training_stream produce."""
    data = _scene(config)
    return config.noise.sigma(data.speeds)
