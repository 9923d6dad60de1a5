"""Multi-person tracking loop.

Each identity is a track filter: a particle set, an observation queue, a
lifetime counter, and a stable track id. Per frame the tracker proposes
one pose per particle for every active filter, scores detections against
filters by elite-averaged OKS, matches greedily, emits every detection
under a track id, then updates particles and lifetimes: matched filters
resample-and-select and gain lifetime (capped), unmatched filters lose
lifetime and deactivate below zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import OksParams, Pose, oks_grid
from .predictor import PredictorModel
from .smc import (
    ParticleSet,
    PoseBatch,
    PoseQueue,
    SmcConfig,
    elite_weights,
    propose,
    resample,
    select_mixture,
)
from .streams import Frame, FrameStream, StreamMeta

NONE = -1  # unassigned marker in match index arrays


@dataclass(frozen=True)
class TrackerConfig:
    smc: SmcConfig = field(default_factory=SmcConfig)
    max_filters: int = 100
    match_threshold: float = 0.3
    initial_lifetime: int = 1
    lifetime_cap: int = 30
    use_hungarian: bool = False

    def __post_init__(self):
        if self.max_filters < 1:
            raise ValueError("max_filters must be >= 1")
        if not 0.0 <= self.match_threshold <= 1.0:
            raise ValueError("match_threshold must be in [0, 1]")
        if self.initial_lifetime < 0:
            raise ValueError("initial_lifetime must be >= 0")
        if self.lifetime_cap < self.initial_lifetime:
            raise ValueError("lifetime_cap must be >= initial_lifetime")


@dataclass(frozen=True)
class TrackedPose:
    pose: Pose
    track_id: int
    frame_id: int


class TrackFilter:
    """One tracked identity: particles, observation queue, lifetime."""

    __slots__ = ("track_id", "particles", "observations", "lifetime", "active")

    def __init__(self, track_id: int, pose: Pose, config: TrackerConfig):
        self.track_id = track_id
        self.particles = ParticleSet.from_pose(
            pose, config.smc.num_particles, config.smc.history_len
        )
        self.observations = PoseQueue.from_pose(pose, config.smc.history_len)
        self.lifetime = config.initial_lifetime
        self.active = True


@dataclass
class TrackerStats:
    frames: int = 0
    emitted: int = 0
    activations: int = 0
    deactivations: int = 0
    overflow_count: int = 0
    propose_seconds: float = 0.0
    match_seconds: float = 0.0
    update_seconds: float = 0.0
    step_seconds: float = 0.0

    @property
    def fps(self) -> float:
        return self.frames / self.step_seconds if self.step_seconds > 0 else float("inf")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fps"] = self.fps
        return d


def score_matrix(oks_tensor: np.ndarray, e: float) -> np.ndarray:
    """Average of each (detection, filter) pair's elite OKS values.

    oks_tensor has shape (C, F, P); for every pair the top ceil(e*P) values
    are averaged. Entries lie in [0, 1].
    """
    c, f, p = oks_tensor.shape
    n = int(np.ceil(e * p))
    if not 1 <= n <= p:
        raise ValueError("eliteness out of range for particle count")
    if n == p:
        return oks_tensor.mean(axis=2)
    part = np.partition(oks_tensor, p - n, axis=2)
    return part[:, :, p - n :].mean(axis=2)


def greedy_match(scores: np.ndarray, threshold: float):
    """Repeatedly assign the globally best remaining (detection, filter) pair.

    Pairs scoring below the (inclusive) threshold stay unassigned. Ties
    break toward the lower detection index, then the lower filter index.
    Returns (k_of_j, j_of_k) index arrays with NONE (-1) for unassigned.
    """
    s = np.asarray(scores, dtype=np.float64).copy()
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    c, f = s.shape
    k_of_j = np.full(c, NONE, dtype=np.int64)
    j_of_k = np.full(f, NONE, dtype=np.int64)
    for _ in range(min(c, f)):
        j, k = np.unravel_index(np.argmax(s), s.shape)
        if s[j, k] < threshold:
            break
        k_of_j[j] = k
        j_of_k[k] = j
        s[j, :] = -np.inf
        s[:, k] = -np.inf
    return k_of_j, j_of_k


def hungarian_match(scores: np.ndarray, threshold: float):
    """Optimal-assignment alternative to greedy_match (same return shape)."""
    from scipy.optimize import linear_sum_assignment

    s = np.asarray(scores, dtype=np.float64)
    c, f = s.shape
    k_of_j = np.full(c, NONE, dtype=np.int64)
    j_of_k = np.full(f, NONE, dtype=np.int64)
    rows, cols = linear_sum_assignment(-s)
    for j, k in zip(rows, cols):
        if s[j, k] >= threshold:
            k_of_j[j] = k
            j_of_k[k] = j
    return k_of_j, j_of_k


class Tracker:
    """Stateful frame-by-frame tracker; step() consumes one frame."""

    def __init__(
        self,
        model: PredictorModel,
        config: TrackerConfig | None = None,
        *,
        rng: np.random.Generator | None = None,
        seed: int = 0,
        oks_params: OksParams | None = None,
    ):
        self.model = model
        self.config = config or TrackerConfig()
        if self.config.smc.history_len != model.config.history_len:
            raise ValueError("tracker history_len must match the model")
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.oks_params = oks_params
        self.filters: list[TrackFilter] = []
        self.next_id = 0
        self.stats = TrackerStats()
        self._num_keypoints: int | None = None

    def _check_detections(self, detections, frame_id):
        for det in detections:
            if self._num_keypoints is None:
                self._num_keypoints = det.num_keypoints
                if self.oks_params is None:
                    self.oks_params = OksParams.default_for(det.num_keypoints)
            if det.num_keypoints != self._num_keypoints:
                raise ValueError(
                    f"frame_id {frame_id}: detection has {det.num_keypoints} "
                    f"keypoints, expected {self._num_keypoints}"
                )

    def step(self, detections: list[Pose], frame_id: int) -> list[TrackedPose]:
        t_step = time.perf_counter()
        self._check_detections(detections, frame_id)
        cfg = self.config
        smc_cfg = cfg.smc
        active = self.filters  # only active filters are retained between steps
        c, f = len(detections), len(active)

        t0 = time.perf_counter()
        proposals = [propose(flt.particles, self.model, self.rng, smc_cfg) for flt in active]
        self.stats.propose_seconds += time.perf_counter() - t0

        t0 = time.perf_counter()
        oks_tensor = None
        k_of_j = np.full(c, NONE, dtype=np.int64)
        j_of_k = np.full(f, NONE, dtype=np.int64)
        if c > 0 and f > 0:
            dets = PoseBatch.from_poses(detections)
            prop_xy = np.concatenate([prop.xy for prop in proposals])
            prop_vis = np.concatenate([prop.visible for prop in proposals])
            grid = oks_grid(
                dets.xy, dets.visible, dets.scale, prop_xy, prop_vis, self.oks_params
            )
            oks_tensor = grid.reshape(c, f, smc_cfg.num_particles)
            scores = score_matrix(oks_tensor, smc_cfg.eliteness)
            matcher = hungarian_match if cfg.use_hungarian else greedy_match
            k_of_j, j_of_k = matcher(scores, cfg.match_threshold)
        self.stats.match_seconds += time.perf_counter() - t0

        # emission plus new-filter activation, in detection order
        emitted = []
        new_filters = []
        for j, det in enumerate(detections):
            k = k_of_j[j]
            if k != NONE:
                emitted.append(TrackedPose(det, active[k].track_id, frame_id))
                continue
            if f + len(new_filters) < cfg.max_filters:
                flt = TrackFilter(self.next_id, det, cfg)
                new_filters.append(flt)
                self.stats.activations += 1
            else:
                # at capacity: the detection still gets a fresh id, no filter
                self.stats.overflow_count += 1
            emitted.append(TrackedPose(det, self.next_id, frame_id))
            self.next_id += 1

        # particle and lifetime updates for filters active before this frame
        t0 = time.perf_counter()
        survivors = []
        for k, flt in enumerate(active):
            flt.particles.push(proposals[k])
            j = j_of_k[k]
            if j != NONE:
                flt.observations.push_pose(detections[j])
                flt.particles.weights = elite_weights(
                    oks_tensor[j, k], smc_cfg.eliteness
                )
                flt.particles = resample(
                    flt.particles, self.rng, systematic=smc_cfg.systematic_resampling
                )
                flt.particles = select_mixture(
                    flt.particles, flt.observations, smc_cfg.alpha, self.rng
                )
                flt.lifetime = min(flt.lifetime + 1, cfg.lifetime_cap)
            else:
                flt.lifetime -= 1
                flt.observations.push_invisible()
                if flt.lifetime < 0:
                    flt.active = False
                    self.stats.deactivations += 1
            if flt.active:
                survivors.append(flt)
        self.stats.update_seconds += time.perf_counter() - t0

        self.filters = survivors + new_filters
        self.stats.frames += 1
        self.stats.emitted += len(emitted)
        self.stats.step_seconds += time.perf_counter() - t_step
        return emitted

    def run(self, stream: FrameStream) -> FrameStream:
        """Track a whole detection stream; returns a stream with track ids."""
        out_frames = []
        for frame in stream.frames:
            tracked = self.step(frame.poses, frame.frame_id)
            out_frames.append(
                Frame(
                    frame_id=frame.frame_id,
                    poses=[tp.pose for tp in tracked],
                    track_ids=[tp.track_id for tp in tracked],
                )
            )
        meta = StreamMeta(
            num_keypoints=stream.meta.num_keypoints,
            image_size=stream.meta.image_size,
            extra={
                "tracker_config": _config_dict(self.config),
                "stats": self.stats.to_dict(),
            },
        )
        return FrameStream(meta=meta, frames=out_frames)


def _config_dict(config: TrackerConfig) -> dict:
    d = asdict(config)
    return d
