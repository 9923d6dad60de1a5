"""Acceptance gate: eleven end-to-end checks of the tracking stack.

Each test covers one numbered criterion and finishes by printing a single
``[PASS]``/``[FAIL]`` line with the measured figures (visible with ``-s`` or
in pytest's captured output). Criterion 10 (throughput) is soft: its line
reports the measured frame rate but the test never fails on it.

The expensive shared artifacts — two trained predictors and a 30-scene
switch-count grid over six tracker variants — are module fixtures, so the
criteria that share them (4-7, 10, 11) pay for them once.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import stats as sps

from conftest import (
    constant_predictor,
    finite_difference_grads,
    grid_pose,
    max_grad_relative_error,
    random_history,
    random_model,
)
from smctrack.evaluation import evaluate
from smctrack.geometry import OksParams, Pose, oks
from smctrack.predictor import (
    KeypointHistory,
    PredictorConfig,
    TrainConfig,
    build_training_set,
    draw_dropout_masks,
    forward,
    load_model,
    nll_loss_grad,
    save_model,
    train,
)
from smctrack.scenes import (
    DetectorModel,
    OcclusionModel,
    SceneConfig,
    simulate,
    training_stream,
)
from smctrack.smc import ParticleSet, SmcConfig, resample
from smctrack.streams import Frame, FrameStream, StreamMeta, read_stream, write_stream
from smctrack.tracker import Tracker, TrackerConfig

HISTORY_LONG = 10
HISTORY_SHORT = 3
PARTICLES = 300
NUM_SCENES = 30
EVAL_KEYPOINTS = 5
ABLATION_FIXED_SIGMA = 1.0

METHODS = (
    "both",
    "epistemic_only",
    "aleatoric_only",
    "none",
    "short_history",
    "baseline",
)


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


# ---------------------------------------------------------------------------
# shared artifacts


def _train_scene_config(seed: int) -> SceneConfig:
    return SceneConfig(
        num_people=5,
        num_frames=300,
        num_keypoints=EVAL_KEYPOINTS,
        occlusion=OcclusionModel(start_prob=0.04, duration=(3, 15)),
        seed=seed,
    )


def _eval_scene_config(seed: int) -> SceneConfig:
    """Evaluation scene family: 4-8 people, occlusions of 5-15 frames, and a
    guaranteed trajectory crossing (the simulator retries until one occurs)."""
    return SceneConfig(
        num_people=4 + seed % 5,
        num_frames=120,
        num_keypoints=EVAL_KEYPOINTS,
        occlusion=OcclusionModel(start_prob=0.03, duration=(5, 15)),
        seed=seed,
    )


@pytest.fixture(scope="module")
def models():
    """Predictors trained at the long and short history length on scenes
    disjoint from every evaluation seed used below."""
    out = {}
    for hist_len in (HISTORY_SHORT, HISTORY_LONG):
        dataset = []
        for s in (100, 101, 102):
            dataset.extend(
                build_training_set(training_stream(_train_scene_config(s)), hist_len)
            )
        model, trace = train(
            dataset,
            TrainConfig(epochs=40, seed=0),
            model_config=PredictorConfig(history_len=hist_len),
        )
        assert len(trace) == 40 and trace[-1] < trace[0]
        out[hist_len] = model
    return out


def _method_tracker(method: str, models: dict, seed: int) -> Tracker:
    if method == "short_history":
        smc = SmcConfig(num_particles=PARTICLES, history_len=HISTORY_SHORT)
        return Tracker(models[HISTORY_SHORT], TrackerConfig(smc=smc), seed=seed)
    if method == "baseline":
        smc = SmcConfig(
            num_particles=1,
            history_len=HISTORY_LONG,
            mc_dropout=False,
            fixed_sigma=0.0,
            alpha=1.0,
        )
        return Tracker(models[HISTORY_LONG], TrackerConfig(smc=smc), seed=seed)
    smc = SmcConfig(
        num_particles=PARTICLES,
        history_len=HISTORY_LONG,
        mc_dropout=method in ("both", "epistemic_only"),
        fixed_sigma=(
            None if method in ("both", "aleatoric_only") else ABLATION_FIXED_SIGMA
        ),
    )
    return Tracker(models[HISTORY_LONG], TrackerConfig(smc=smc), seed=seed)


@pytest.fixture(scope="module")
def switch_grid(models):
    """num_switches per (method, scene) over NUM_SCENES seeded scenes."""
    switches = {m: [] for m in METHODS}
    seconds = {m: 0.0 for m in METHODS}
    sim_seconds = 0.0
    for seed in range(1, NUM_SCENES + 1):
        t0 = time.perf_counter()
        detections, ground_truth = simulate(_eval_scene_config(seed))
        sim_seconds += time.perf_counter() - t0
        assert detections.meta.extra["crossing"]["crossed"] is True
        for method in METHODS:
            t0 = time.perf_counter()
            tracker = _method_tracker(method, models, seed)
            report = evaluate(tracker.run(detections), ground_truth)
            seconds[method] += time.perf_counter() - t0
            switches[method].append(report.num_switches)
        print(
            f"scene {seed:2d}: "
            + " ".join(f"{m}={switches[m][-1]}" for m in METHODS),
            flush=True,
        )
    return {
        "switches": {m: np.array(v, dtype=np.int64) for m, v in switches.items()},
        "seconds": seconds,
        "sim_seconds": sim_seconds,
    }


def _mean_no_worse(a: np.ndarray, b: np.ndarray) -> bool:
    """mean(a) <= mean(b), with one standard error of the paired difference
    allowed as tie tolerance."""
    diff = a.astype(np.float64) - b.astype(np.float64)
    sem = float(diff.std(ddof=1)) / math.sqrt(len(diff)) if len(diff) > 1 else 0.0
    return float(a.mean()) <= float(b.mean()) + sem


# ---------------------------------------------------------------------------
# criterion 1: analytic gradients vs central finite differences


def test_criterion_01_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    config = PredictorConfig(
        history_len=3, hidden_size=4, fc_size=3, dropout_rate=0.3
    )
    worst = 0.0
    for trial in range(20):
        model = random_model(config, rng, scale=0.5)
        batch = [
            (random_history(rng, 3), rng.normal(0.0, 4.0, size=2)) for _ in range(3)
        ]
        l2 = 0.0 if trial % 2 == 0 else 1e-3
        masks = draw_dropout_masks(model, len(batch), rng) if trial % 3 == 0 else None
        _, analytic = nll_loss_grad(model, batch, l2_lambda=l2, dropout_masks=masks)
        numeric = finite_difference_grads(
            model, batch, l2_lambda=l2, dropout_masks=masks
        )
        worst = max(worst, max_grad_relative_error(analytic, numeric))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 60.0
    _report(
        1,
        ok,
        f"max relative gradient error {worst:.3e} over 20 random instances "
        f"(limit 1e-4), {elapsed:.1f}s (limit 60s)",
    )


# ---------------------------------------------------------------------------
# criterion 2: predicted sigma tracks the true observation noise


def _velocity_dataset(n, rng, sigma_fn, history_len=HISTORY_LONG, scale=80.0):
    """Constant-velocity keypoint histories with Gaussian-noise targets whose
    true scale is a known function of the speed."""
    pairs, sig_true = [], np.empty(n)
    for i in range(n):
        speed = rng.uniform(0.5, 8.0)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        v = speed * np.array([np.cos(theta), np.sin(theta)])
        start = rng.uniform(100.0, 400.0, size=2)
        xy = start + np.arange(history_len)[:, None] * v
        hist = KeypointHistory.from_track(xy, np.ones(history_len, bool), scale)
        sigma = sigma_fn(speed)
        pairs.append((hist, v + rng.normal(0.0, sigma, size=2)))
        sig_true[i] = sigma
    return pairs, sig_true


def test_criterion_02_sigma_recovery():
    t0 = time.perf_counter()
    train_cfg = TrainConfig(epochs=10, learning_rate=3e-3, seed=0)

    def hetero(speed):
        return 0.5 + 0.5 * speed

    pairs, _ = _velocity_dataset(50_000, np.random.default_rng(20), hetero)
    model, _ = train(pairs, train_cfg)
    held, sig_true = _velocity_dataset(5_000, np.random.default_rng(21), hetero)
    pred = np.array(
        [forward(model, h, mc_dropout=False).sigma.mean() for h, _ in held]
    )
    rho = float(sps.spearmanr(pred, sig_true).statistic)

    pairs_h, _ = _velocity_dataset(50_000, np.random.default_rng(22), lambda s: 2.0)
    model_h, _ = train(pairs_h, train_cfg)
    held_h, _ = _velocity_dataset(5_000, np.random.default_rng(23), lambda s: 2.0)
    pred_h = np.array(
        [forward(model_h, h, mc_dropout=False).sigma.mean() for h, _ in held_h]
    )
    ratio = float(pred_h.mean()) / 2.0

    elapsed = time.perf_counter() - t0
    ok = rho > 0.8 and 0.8 <= ratio <= 1.2 and elapsed < 300.0
    _report(
        2,
        ok,
        f"held-out rank correlation {rho:.3f} (need > 0.8); homoscedastic "
        f"mean sigma ratio {ratio:.3f} (need within 20% of 1), "
        f"{elapsed:.0f}s (limit 300s)",
    )


# ---------------------------------------------------------------------------
# criterion 3: multinomial resampling follows the weights


def test_criterion_03_resampling_chisquare():
    p = 10
    weights = np.arange(1, p + 1, dtype=np.float64)
    weights /= weights.sum()
    xy = np.zeros((p, 1, 1, 2), dtype=np.float32)
    xy[:, 0, 0, 0] = np.arange(p)  # particle index readable from coordinate
    base = ParticleSet(xy, np.ones((p, 1, 1), bool), np.ones((p, 1)), weights)

    rng = np.random.default_rng(33)
    draws = 100_000
    counts = np.zeros(p, dtype=np.int64)
    for _ in range(draws):
        picked = resample(base, rng).xy[:, 0, 0, 0].astype(np.int64)
        np.add.at(counts, picked, 1)
    expected = weights * (draws * p)
    result = sps.chisquare(counts, expected)
    ok = result.pvalue > 0.001
    _report(
        3,
        ok,
        f"chi-square p={result.pvalue:.4f} over {draws} resamples of fixed "
        f"non-uniform weights (need p > 0.001); counts {counts.tolist()}",
    )


# ---------------------------------------------------------------------------
# criterion 4: the degenerate configuration is a plain deterministic
# predict-and-match tracker


def _single_hypothesis_oracle(model, stream, *, match_threshold=0.3,
                              initial_lifetime=1, lifetime_cap=30):
    """Reference tracker written independently of the particle machinery.

    One deterministic hypothesis per track: predict each keypoint's next
    position from the track's own history queue, match predictions to
    detections greedily by pose similarity, emit detections under the
    matched track's id, and keep the standard lifetime bookkeeping. The
    history queue absorbs the track's own predictions, never observations.
    """
    hist_len = model.config.history_len
    k_count = stream.meta.num_keypoints
    params = OksParams.default_for(k_count)
    tracks: list[dict] = []
    next_id = 0
    frames_out = []
    for frame in stream.frames:
        dets = frame.poses
        assert len(tracks) < 100, "oracle assumes the filter pool never fills"

        predicted = []
        for tr in tracks:
            xy = np.zeros((k_count, 2), dtype=np.float32)
            vis = np.zeros(k_count, dtype=bool)
            for k in range(k_count):
                if not tr["vis"][:, k].any():
                    continue
                hist = KeypointHistory.from_track(
                    tr["xy"][:, k], tr["vis"][:, k], tr["scale"]
                )
                pred = forward(model, hist, mc_dropout=False)
                xy[k] = hist.last_visible + pred.mean
                vis[k] = True
            predicted.append(Pose(xy=xy, visible=vis, scale=tr["scale"]))

        scores = np.zeros((len(dets), len(tracks)))
        for j, det in enumerate(dets):
            for k, hyp in enumerate(predicted):
                scores[j, k] = oks(det, hyp, params)
        det_match = [None] * len(dets)
        trk_match = [None] * len(tracks)
        while True:
            best, bj, bk = -1.0, None, None
            for j in range(len(dets)):
                if det_match[j] is not None:
                    continue
                for k in range(len(tracks)):
                    if trk_match[k] is not None:
                        continue
                    if scores[j, k] > best:
                        best, bj, bk = scores[j, k], j, k
            if bj is None or best < match_threshold:
                break
            det_match[bj] = bk
            trk_match[bk] = bj

        ids = []
        spawned = []
        for j, det in enumerate(dets):
            if det_match[j] is not None:
                ids.append(tracks[det_match[j]]["id"])
                continue
            xy = np.zeros((hist_len, k_count, 2), dtype=np.float32)
            vis = np.zeros((hist_len, k_count), dtype=bool)
            xy[-1] = det.xy
            vis[-1] = det.visible
            spawned.append(
                {
                    "id": next_id,
                    "xy": xy,
                    "vis": vis,
                    "scale": float(np.float32(det.scale)),
                    "lifetime": initial_lifetime,
                }
            )
            ids.append(next_id)
            next_id += 1

        survivors = []
        for k, tr in enumerate(tracks):
            tr["xy"] = np.concatenate(
                [tr["xy"][1:], predicted[k].xy[None]], axis=0
            )
            tr["vis"] = np.concatenate(
                [tr["vis"][1:], predicted[k].visible[None]], axis=0
            )
            if trk_match[k] is not None:
                tr["lifetime"] = min(tr["lifetime"] + 1, lifetime_cap)
            else:
                tr["lifetime"] -= 1
            if tr["lifetime"] >= 0:
                survivors.append(tr)
        tracks = survivors + spawned

        frames_out.append(
            Frame(frame_id=frame.frame_id, poses=list(dets), track_ids=ids)
        )
    return frames_out


def test_criterion_04_degenerate_equivalence(models):
    config = SceneConfig(
        num_people=5,
        num_frames=100,
        num_keypoints=EVAL_KEYPOINTS,
        occlusion=OcclusionModel(start_prob=0.03, duration=(5, 15)),
        detector=DetectorModel(miss_prob=0.1, fp_rate=0.3),
        seed=77,
    )
    detections, _ = simulate(config)
    assert len(detections.frames) == 100
    model = models[HISTORY_SHORT]
    smc = SmcConfig(
        num_particles=1,
        history_len=HISTORY_SHORT,
        mc_dropout=False,
        fixed_sigma=0.0,
        alpha=1.0,
    )
    runs = [
        Tracker(model, TrackerConfig(smc=smc), seed=s).run(detections).frames
        for s in (0, 1, 12345)
    ]
    seed_invariant = runs[0] == runs[1] == runs[2]
    oracle_frames = _single_hypothesis_oracle(model, detections)
    oracle_match = runs[0] == oracle_frames
    ok = seed_invariant and oracle_match
    _report(
        4,
        ok,
        f"seed-invariant={seed_invariant}, matches independent "
        f"single-hypothesis oracle on 100 random frames={oracle_match}",
    )


# ---------------------------------------------------------------------------
# criteria 5-7: switch counts over the shared 30-scene grid


def test_criterion_05_switch_reduction(switch_grid):
    full = switch_grid["switches"]["both"]
    base = switch_grid["switches"]["baseline"]
    ratio = float(full.mean()) / float(base.mean())
    wins = int(np.sum(full < base))
    informative = int(np.sum(full != base))
    pvalue = float(
        sps.binomtest(wins, informative, 0.5, alternative="greater").pvalue
    )
    elapsed = (
        switch_grid["sim_seconds"]
        + switch_grid["seconds"]["both"]
        + switch_grid["seconds"]["baseline"]
    )
    ok = ratio <= 0.70 and pvalue < 0.01 and elapsed < 1800.0
    _report(
        5,
        ok,
        f"mean switches {full.mean():.2f} vs baseline {base.mean():.2f} over "
        f"{NUM_SCENES} scenes, ratio {ratio:.3f} (need <= 0.70), sign test "
        f"p={pvalue:.2e} (need < 0.01), {elapsed:.0f}s (limit 1800s)",
    )


def test_criterion_06_ablation_ordering(switch_grid):
    sw = switch_grid["switches"]
    print("ablation table (num_switches):")
    for method in METHODS:
        v = sw[method]
        print(
            f"  {method:>15}: mean {v.mean():6.2f} std {v.std(ddof=1):5.2f} "
            f"min {v.min():3d} max {v.max():3d} | {v.tolist()}"
        )
    checks = {
        "both<=epistemic": _mean_no_worse(sw["both"], sw["epistemic_only"]),
        "both<=aleatoric": _mean_no_worse(sw["both"], sw["aleatoric_only"]),
        "epistemic<=none": _mean_no_worse(sw["epistemic_only"], sw["none"]),
        "aleatoric<=none": _mean_no_worse(sw["aleatoric_only"], sw["none"]),
    }
    ok = all(checks.values())
    means = {m: round(float(sw[m].mean()), 2) for m in
             ("both", "epistemic_only", "aleatoric_only", "none")}
    _report(
        6,
        ok,
        f"means {means}; ordering (ties allowed within one paired standard "
        f"error): {checks}",
    )


def test_criterion_07_longer_history_no_worse(switch_grid):
    long_hist = switch_grid["switches"]["both"]
    short_hist = switch_grid["switches"]["short_history"]
    ok = _mean_no_worse(long_hist, short_hist)
    _report(
        7,
        ok,
        f"mean switches history={HISTORY_LONG}: {long_hist.mean():.2f} vs "
        f"history={HISTORY_SHORT}: {short_hist.mean():.2f} over {NUM_SCENES} "
        f"scenes (long must be no worse, ties within one paired standard error)",
    )


# ---------------------------------------------------------------------------
# criterion 8: occlusion survival and deactivation lifecycle


def _occlusion_fixture(pre, gap, post):
    """Detection stream for one stationary person absent during [pre, pre+gap),
    plus ground truth where the person exists in every frame."""
    pose = grid_pose((200.0, 200.0), EVAL_KEYPOINTS, spread=15.0, scale=80.0)
    total = pre + gap + post
    det_frames, gt_frames = [], []
    for t in range(total):
        present = not (pre <= t < pre + gap)
        det_frames.append(Frame(frame_id=t, poses=[pose] if present else []))
        gt_frames.append(Frame(frame_id=t, poses=[pose], track_ids=[0]))
    meta = StreamMeta(num_keypoints=EVAL_KEYPOINTS)
    return (
        FrameStream(meta=meta, frames=det_frames),
        FrameStream(meta=meta, frames=gt_frames),
    )


def _lifecycle_tracker():
    model = constant_predictor(history_len=5, mean_offset=(0.0, 0.0), sigma_norm=0.02)
    smc = SmcConfig(num_particles=30, history_len=5, mc_dropout=False)
    return Tracker(model, TrackerConfig(smc=smc), seed=0)


def test_criterion_08_lifecycle():
    # ten-frame occlusion after 15 matched frames: the filter must survive
    detections, ground_truth = _occlusion_fixture(pre=15, gap=10, post=15)
    tracker = _lifecycle_tracker()
    out = tracker.run(detections)
    ids = [f.track_ids[0] for f in out.frames if f.track_ids]
    survived = (
        len(set(ids)) == 1
        and tracker.stats.activations == 1
        and tracker.stats.deactivations == 0
    )
    switches = evaluate(out, ground_truth).num_switches

    # forty-frame occlusion after the lifetime saturates: deactivate + new id
    detections2, _ = _occlusion_fixture(pre=35, gap=40, post=10)
    tracker2 = _lifecycle_tracker()
    out2 = tracker2.run(detections2)
    ids_pre = [f.track_ids[0] for f in out2.frames[:35] if f.track_ids]
    ids_post = [f.track_ids[0] for f in out2.frames[75:] if f.track_ids]
    reassigned = (
        len(set(ids_pre)) == 1
        and len(set(ids_post)) == 1
        and ids_pre[0] != ids_post[0]
        and tracker2.stats.deactivations == 1
        and tracker2.stats.activations == 2
    )
    ok = survived and switches == 0 and reassigned
    _report(
        8,
        ok,
        f"10-frame occlusion: survived={survived}, switches={switches} "
        f"(need 0); 40-frame occlusion after saturation: deactivated and "
        f"new id issued={reassigned}",
    )


# ---------------------------------------------------------------------------
# criterion 9: evaluator self-test


def _two_track_streams(swap_at, total, hyp_ids=(10, 11)):
    pose_a = grid_pose((100.0, 100.0), EVAL_KEYPOINTS, spread=12.0, scale=80.0)
    pose_b = grid_pose((450.0, 350.0), EVAL_KEYPOINTS, spread=12.0, scale=80.0)
    gt_frames, hyp_frames = [], []
    for t in range(total):
        gt_frames.append(Frame(frame_id=t, poses=[pose_a, pose_b], track_ids=[0, 1]))
        ids = list(hyp_ids) if t < swap_at else list(hyp_ids[::-1])
        hyp_frames.append(Frame(frame_id=t, poses=[pose_a, pose_b], track_ids=ids))
    meta = StreamMeta(num_keypoints=EVAL_KEYPOINTS)
    return (
        FrameStream(meta=meta, frames=hyp_frames),
        FrameStream(meta=meta, frames=gt_frames),
    )


def _relabel(stream, mapping):
    frames = [
        Frame(
            frame_id=f.frame_id,
            poses=list(f.poses),
            track_ids=[mapping[i] for i in f.track_ids],
        )
        for f in stream.frames
    ]
    return FrameStream(meta=stream.meta, frames=frames)


def test_criterion_09_evaluator_selftest():
    hyp, gt = _two_track_streams(swap_at=10, total=20)
    report = evaluate(hyp, gt)
    swap_ok = (
        report.num_switches == 2
        and report.num_misses == 0
        and report.num_false_positives == 0
    )

    relabeled = evaluate(_relabel(hyp, {10: 907, 11: 3}), gt)
    fields = ("num_switches", "num_misses", "num_false_positives", "num_gt", "mota")
    bijection_ok = all(
        getattr(report, f) == getattr(relabeled, f) for f in fields
    ) and all(
        getattr(report.per_keypoint[k], f) == getattr(relabeled.per_keypoint[k], f)
        for k in report.per_keypoint
        for f in fields
    )
    ok = swap_ok and bijection_ok
    _report(
        9,
        ok,
        f"two-track swap gives num_switches={report.num_switches} (need "
        f"exactly 2); id-bijection relabeling leaves all counters "
        f"unchanged={bijection_ok}",
    )


# ---------------------------------------------------------------------------
# criterion 10 (soft): throughput at 10 simultaneous tracks


def test_criterion_10_throughput_report(models):
    fps = {}
    for k_count in (EVAL_KEYPOINTS, 17):
        config = SceneConfig(
            num_people=10,
            num_frames=25,
            num_keypoints=k_count,
            occlusion=OcclusionModel(start_prob=0.0),
            detector=DetectorModel(miss_prob=0.0, fp_rate=0.0),
            seed=42,
        )
        detections, _ = simulate(config)
        smc = SmcConfig(num_particles=PARTICLES, history_len=HISTORY_LONG)
        tracker = Tracker(models[HISTORY_LONG], TrackerConfig(smc=smc), seed=0)
        out = tracker.run(detections)
        stats = out.meta.extra["stats"]
        assert stats["fps"] > 0 and tracker.stats.activations == 10
        fps[k_count] = stats["fps"]
    status = "SOFT-PASS" if min(fps.values()) >= 10.0 else "SOFT-MISS"
    print(
        f"[{status}] criterion 10: 10 tracks at {PARTICLES} particles, "
        f"history {HISTORY_LONG}: "
        + ", ".join(f"{v:.1f} fps at K={k}" for k, v in fps.items())
        + " excluding I/O (target >= 10; reported, never failed)",
        flush=True,
    )


# ---------------------------------------------------------------------------
# criterion 11: lossless serialization


def _random_stream(rng):
    k_count = int(rng.integers(1, 7))
    meta = StreamMeta(
        num_keypoints=k_count,
        image_size=(int(rng.integers(100, 2000)), int(rng.integers(100, 2000))),
        extra={"tag": int(rng.integers(0, 10**9)), "nested": {"v": float(rng.normal())}},
    )
    with_ids = bool(rng.random() < 0.5)
    frames = []
    frame_id = int(rng.integers(0, 3))
    for _ in range(int(rng.integers(0, 6))):
        n = int(rng.integers(0, 5))
        poses = [
            Pose(
                xy=rng.uniform(-1e4, 1e4, size=(k_count, 2)),
                visible=rng.random(k_count) < 0.8,
                confidence=rng.random(k_count),
                scale=float(rng.uniform(0.1, 300.0)),
                score=float(rng.random()),
            )
            for _ in range(n)
        ]
        ids = (
            [int(v) for v in rng.choice(10_000, size=n, replace=False)]
            if with_ids
            else None
        )
        frames.append(Frame(frame_id=frame_id, poses=poses, track_ids=ids))
        frame_id += int(rng.integers(1, 5))
    return FrameStream(meta=meta, frames=frames)


def test_criterion_11_serialization(models, tmp_path):
    model = models[HISTORY_LONG]
    path = tmp_path / "model.npz"
    save_model(model, path)
    reloaded = load_model(path)
    params_ok = all(
        model.params[k].tobytes() == reloaded.params[k].tobytes()
        for k in model.params
    )
    rng = np.random.default_rng(55)
    forwards_ok = True
    for _ in range(50):
        hist = random_history(rng, HISTORY_LONG)
        a = forward(model, hist, mc_dropout=False)
        b = forward(reloaded, hist, mc_dropout=False)
        forwards_ok &= np.array_equal(a.mean, b.mean) and np.array_equal(
            a.sigma, b.sigma
        )

    stream_path = tmp_path / "stream.jsonl"
    stream_rng = np.random.default_rng(56)
    streams_ok = 0
    for _ in range(1000):
        stream = _random_stream(stream_rng)
        write_stream(stream, stream_path)
        streams_ok += read_stream(stream_path) == stream
    ok = params_ok and forwards_ok and streams_ok == 1000
    _report(
        11,
        ok,
        f"model reload bit-identical (params={params_ok}, 50 dropout-off "
        f"forwards={forwards_ok}); {streams_ok}/1000 random streams "
        f"round-tripped losslessly",
    )
