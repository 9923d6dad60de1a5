#!/usr/bin/env python3
"""Measure tracking throughput with many simultaneous tracks.

Simulates crowded scenes (no occlusions, no detector noise, so the filter
count stays constant), runs the tracker at the full particle budget, and
reports the sustained frame rate excluding I/O as measured by the tracker's
own run statistics. Weight values do not affect speed, so by default a
throwaway model is trained for a single epoch; pass --model to benchmark
with an existing one.
"""

from __future__ import annotations

import argparse

from smctrack.predictor import PredictorConfig, TrainConfig, build_training_set, load_model, train
from smctrack.scenes import DetectorModel, OcclusionModel, SceneConfig, simulate, training_stream
from smctrack.smc import SmcConfig
from smctrack.tracker import Tracker, TrackerConfig


def quick_model(history_len: int):
    stream = training_stream(
        SceneConfig(num_people=3, num_frames=120, num_keypoints=5, seed=900)
    )
    dataset = build_training_set(stream, history_len)
    model, _ = train(
        dataset,
        TrainConfig(epochs=5, seed=0),
        model_config=PredictorConfig(history_len=history_len),
    )
    return model


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", help="model file to benchmark with")
    parser.add_argument("--people", type=int, default=10)
    parser.add_argument("--frames", type=int, default=40)
    parser.add_argument("--particles", type=int, default=300)
    parser.add_argument("--history-len", type=int, default=10)
    parser.add_argument(
        "--keypoints",
        type=int,
        nargs="+",
        default=[5, 17],
        help="keypoint counts to benchmark (one run each)",
    )
    args = parser.parse_args()

    model = load_model(args.model) if args.model else quick_model(args.history_len)
    if model.config.history_len != args.history_len:
        raise SystemExit(
            f"model history length {model.config.history_len} != {args.history_len}"
        )

    print(
        f"{args.people} tracks, {args.particles} particles, "
        f"history length {args.history_len}, {args.frames} frames"
    )
    for k_count in args.keypoints:
        detections, _ = simulate(
            SceneConfig(
                num_people=args.people,
                num_frames=args.frames,
                num_keypoints=k_count,
                occlusion=OcclusionModel(start_prob=0.0),
                detector=DetectorModel(miss_prob=0.0, fp_rate=0.0),
                seed=42,
            )
        )
        smc = SmcConfig(num_particles=args.particles, history_len=args.history_len)
        tracker = Tracker(model, TrackerConfig(smc=smc), seed=0)
        stats = tracker.run(detections).meta.extra["stats"]
        extra = (
            ""
            if stats["activations"] == args.people
            else f", {stats['activations']} activations (weak model re-spawned tracks)"
        )
        print(
            f"  K={k_count:2d}: {stats['fps']:6.2f} fps excluding I/O "
            f"({stats['step_seconds']:.2f}s for {stats['frames']} frames{extra})"
        )


if __name__ == "__main__":
    main()
