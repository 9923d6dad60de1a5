"""Command-line surface: simulate / train / track / eval / ablate / plot-data.

Every subcommand is deterministic given explicit seeds, accepts a JSON
config file whose keys mirror the long option names (explicit CLI flags
win), and echoes the resolved configuration into its output files' metadata.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .evaluation import evaluate
from .geometry import OksParams
from .predictor import (
    KeypointHistory,
    PredictorConfig,
    TrainConfig,
    build_training_set,
    forward,
    load_model,
    save_model,
    train,
)
from .scenes import DetectorModel, NoiseModel, OcclusionModel, SceneConfig, simulate, training_stream
from .smc import SmcConfig
from .streams import read_stream, write_stream
from .tracker import Tracker, TrackerConfig

ABLATION_HISTORY_LENS = (3, 7, 10, 15)


def _load_config_file(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return data


class _Resolver:
    """CLI flag > config-file key > hard default."""

    def __init__(self, args):
        self.args = args
        self.file = _load_config_file(getattr(args, "config", None))
        self.resolved = {}

    def get(self, name, default):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.file.get(name, default)
        self.resolved[name] = value
        return value


def _scene_config(r: _Resolver) -> SceneConfig:
    return SceneConfig(
        num_people=int(r.get("people", 4)),
        num_frames=int(r.get("frames", 300)),
        num_keypoints=int(r.get("keypoints", 17)),
        image_size=(int(r.get("width", 640)), int(r.get("height", 480))),
        speed_range=(float(r.get("speed_min", 1.0)), float(r.get("speed_max", 4.0))),
        noise=NoiseModel(
            base=float(r.get("noise_base", 0.3)),
            speed_gain=float(r.get("noise_gain", 0.15)),
        ),
        occlusion=OcclusionModel(
            start_prob=float(r.get("occlusion_prob", 0.01)),
            duration=(int(r.get("occlusion_min", 5)), int(r.get("occlusion_max", 15))),
        ),
        camera_pan=float(r.get("camera_pan", 1.0)),
        detector=DetectorModel(
            miss_prob=float(r.get("miss_prob", 0.05)),
            fp_rate=float(r.get("fp_rate", 0.2)),
        ),
        seed=int(r.get("seed", 0)),
    )


def cmd_simulate(args) -> int:
    r = _Resolver(args)
    config = _scene_config(r)
    detections, ground_truth = simulate(config)
    write_stream(detections, args.out_detections)
    write_stream(ground_truth, args.out_ground_truth)
    if args.out_train is not None:
        write_stream(training_stream(config), args.out_train)
    info = detections.meta.extra.get("crossing", {})
    print(
        f"simulated {config.num_frames} frames, {config.num_people} people, "
        f"K={config.num_keypoints}, crossing={info.get('crossed')} "
        f"(attempts={info.get('attempts')})"
    )
    return 0


def cmd_train(args) -> int:
    r = _Resolver(args)
    model_config = PredictorConfig(
        history_len=int(r.get("history_len", 10)),
        hidden_size=int(r.get("hidden_size", 64)),
        fc_size=int(r.get("fc_size", 40)),
        dropout_rate=float(r.get("dropout", 0.3)),
        leak_slope=float(r.get("leak_slope", 0.01)),
    )
    train_config = TrainConfig(
        learning_rate=float(r.get("lr", 1e-3)),
        batch_size=int(r.get("batch_size", 30)),
        l2_lambda=float(r.get("l2", 1e-4)),
        epochs=int(r.get("epochs", 20)),
        seed=int(r.get("seed", 0)),
    )
    dataset = []
    for path in args.ground_truth:
        stream = read_stream(path)
        dataset.extend(build_training_set(stream, model_config.history_len))
    if not dataset:
        raise ValueError("no training pairs extracted from the given streams")
    print(f"training on {len(dataset)} pairs")
    t0 = time.perf_counter()
    model, trace = train(dataset, train_config, model_config=model_config)
    for epoch, loss in enumerate(trace):
        print(f"epoch {epoch} loss {loss:.6f}")
    if len(trace) < train_config.epochs:
        print("training aborted on divergence; kept last finite checkpoint")
    print(f"trained in {time.perf_counter() - t0:.1f}s")
    save_model(
        model,
        args.out_model,
        extra={
            "train_config": asdict(train_config),
            "sources": [str(p) for p in args.ground_truth],
            "num_pairs": len(dataset),
            "loss_trace": trace,
        },
    )
    return 0


def _tracker_configs(r: _Resolver, history_len: int):
    smc = SmcConfig(
        num_particles=int(r.get("particles", 300)),
        history_len=history_len,
        alpha=float(r.get("alpha", 0.45)),
        eliteness=float(r.get("eliteness", 0.15)),
        sigma_floor=float(r.get("sigma_floor", 1e-3)),
        sigma_ceiling=float(r.get("sigma_ceiling", 10.0)),
        mc_dropout=bool(r.get("mc_dropout", True)),
        fixed_sigma=r.get("fixed_sigma", None),
        systematic_resampling=bool(r.get("systematic_resampling", False)),
    )
    return TrackerConfig(
        smc=smc,
        max_filters=int(r.get("max_filters", 100)),
        match_threshold=float(r.get("match_threshold", 0.3)),
        initial_lifetime=int(r.get("initial_lifetime", 1)),
        lifetime_cap=int(r.get("lifetime_cap", 30)),
        use_hungarian=bool(r.get("hungarian", False)),
    )


def cmd_track(args) -> int:
    r = _Resolver(args)
    detections = read_stream(args.detections)
    model = load_model(args.model)
    config = _tracker_configs(r, model.config.history_len)
    seed = int(r.get("seed", 0))
    tracker = Tracker(model, config, seed=seed)
    output = tracker.run(detections)
    output.meta.extra["run"] = {
        "detections": str(args.detections),
        "model": str(args.model),
        "seed": seed,
    }
    write_stream(output, args.out)
    stats = tracker.stats.to_dict()
    if args.stats is not None:
        with open(args.stats, "w") as fh:
            json.dump(
                {"stats": stats, "tracker_config": asdict(config), "seed": seed},
                fh,
                indent=2,
            )
            fh.write("\n")
    print(
        f"tracked {stats['frames']} frames at {stats['fps']:.2f} fps "
        f"(excl. I/O), {stats['activations']} activations, "
        f"{stats['overflow_count']} filter overflows"
    )
    return 0


def cmd_eval(args) -> int:
    output = read_stream(args.tracked)
    ground_truth = read_stream(args.ground_truth)
    report = evaluate(
        output,
        ground_truth,
        assign_threshold=args.assign_threshold,
    )
    text = report.to_text()
    print(text, end="")
    if args.out_text is not None:
        Path(args.out_text).write_text(text)
    if args.out_table is not None:
        rows = report.to_rows()
        with open(args.out_table, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return 0


def ablation_rows(fixed_sigma: float):
    """The 2x2 uncertainty grid at L=10 plus the history-length sweep."""
    rows = [
        {"method": f"L={l}", "history_len": l, "mc_dropout": True, "fixed_sigma": None}
        for l in ABLATION_HISTORY_LENS
    ]
    rows += [
        {
            "method": "epistemic-only",
            "history_len": 10,
            "mc_dropout": True,
            "fixed_sigma": fixed_sigma,
        },
        {
            "method": "aleatoric-only",
            "history_len": 10,
            "mc_dropout": False,
            "fixed_sigma": None,
        },
        {
            "method": "none",
            "history_len": 10,
            "mc_dropout": False,
            "fixed_sigma": fixed_sigma,
        },
    ]
    return rows


def cmd_ablate(args) -> int:
    r = _Resolver(args)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    seeds = int(r.get("seeds", 5))
    particles = int(r.get("particles", 300))
    epochs = int(r.get("epochs", 10))
    fixed_sigma = float(r.get("ablate_fixed_sigma", 1.0))
    train_scenes = int(r.get("train_scenes", 2))
    scene_base = _scene_config(r)

    models = {}
    for hist_len in sorted({row["history_len"] for row in ablation_rows(fixed_sigma)}):
        model_path = workdir / f"model_L{hist_len}.npz"
        if args.reuse_models and model_path.exists():
            models[hist_len] = load_model(model_path)
            continue
        dataset = []
        for s in range(train_scenes):
            cfg = SceneConfig(
                **{**asdict_scene(scene_base), "seed": 10_000 + s}
            )
            dataset.extend(build_training_set(training_stream(cfg), hist_len))
        model, _ = train(
            dataset,
            TrainConfig(epochs=epochs, seed=0),
            model_config=PredictorConfig(history_len=hist_len),
        )
        save_model(model, model_path)
        models[hist_len] = model
        print(f"trained L={hist_len} on {len(dataset)} pairs")

    results = []
    for row in ablation_rows(fixed_sigma):
        switches = []
        motas = []
        for s in range(seeds):
            cfg = SceneConfig(**{**asdict_scene(scene_base), "seed": s})
            detections, ground_truth = simulate(cfg)
            smc = SmcConfig(
                num_particles=particles,
                history_len=row["history_len"],
                mc_dropout=row["mc_dropout"],
                fixed_sigma=row["fixed_sigma"],
            )
            tracker = Tracker(
                models[row["history_len"]], TrackerConfig(smc=smc), seed=s
            )
            report = evaluate(tracker.run(detections), ground_truth)
            switches.append(report.num_switches)
            motas.append(report.mota)
        results.append(
            {
                "method": row["method"],
                "history_len": row["history_len"],
                "mc_dropout": row["mc_dropout"],
                "fixed_sigma": row["fixed_sigma"],
                "seeds": seeds,
                "mean_switches": statistics.mean(switches),
                "std_switches": statistics.pstdev(switches),
                "mean_mota": statistics.mean(motas),
                "switches": " ".join(str(v) for v in switches),
            }
        )
        print(
            f"{row['method']:>15}: mean switches "
            f"{results[-1]['mean_switches']:.2f} over {seeds} seeds"
        )

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(results[0].keys()))
        writer.writeheader()
        writer.writerows(results)
    return 0


def asdict_scene(config: SceneConfig) -> dict:
    d = asdict(config)
    d["noise"] = NoiseModel(**d["noise"])
    d["occlusion"] = OcclusionModel(
        start_prob=d["occlusion"]["start_prob"],
        duration=tuple(d["occlusion"]["duration"]),
    )
    d["detector"] = DetectorModel(**d["detector"])
    d["image_size"] = tuple(d["image_size"])
    d["speed_range"] = tuple(d["speed_range"])
    return d


def cmd_plot_data(args) -> int:
    stream = read_stream(args.stream)
    if not stream.has_track_ids:
        raise ValueError("plot-data needs a stream with track ids")
    model = load_model(args.model)
    hist_len = model.config.history_len
    frame_ids = [fr.frame_id for fr in stream.frames]
    if args.frame not in frame_ids:
        raise ValueError(f"frame_id {args.frame} not in stream")
    t = frame_ids.index(args.frame)
    if t < hist_len:
        raise ValueError(f"frame_id {args.frame} has fewer than {hist_len} prior frames")

    k_count = stream.meta.num_keypoints
    window = stream.frames[t - hist_len : t]
    xy = np.zeros((hist_len, k_count, 2))
    vis = np.zeros((hist_len, k_count), dtype=bool)
    scale = 0.0
    for i, fr in enumerate(window):
        if args.track_id in (fr.track_ids or []):
            pose = fr.poses[fr.track_ids.index(args.track_id)]
            xy[i] = pose.xy
            vis[i] = pose.visible
            scale = pose.scale
    if scale <= 0:
        raise ValueError(f"track {args.track_id} absent from the whole window")

    rng = np.random.default_rng(args.seed)
    rows = []
    for k in range(k_count):
        if not vis[:, k].any():
            continue
        hist = KeypointHistory.from_track(xy[:, k], vis[:, k], scale)
        means = np.empty((args.draws, 2))
        sigmas = np.empty((args.draws, 2))
        for d in range(args.draws):
            pred = forward(model, hist, mc_dropout=True, rng=rng)
            means[d] = hist.last_visible + pred.mean
            sigmas[d] = pred.sigma
            rows.append(
                {
                    "kind": "draw",
                    "keypoint": k,
                    "draw": d,
                    "x": means[d, 0],
                    "y": means[d, 1],
                    "sigma_x": sigmas[d, 0],
                    "sigma_y": sigmas[d, 1],
                }
            )
        rows.append(
            {
                "kind": "summary",
                "keypoint": k,
                "draw": "",
                "x": means[:, 0].mean(),
                "y": means[:, 1].mean(),
                "sigma_x": float(
                    np.sqrt(means[:, 0].var() + (sigmas[:, 0] ** 2).mean())
                ),
                "sigma_y": float(
                    np.sqrt(means[:, 1].var() + (sigmas[:, 1] ** 2).mean())
                ),
            }
        )
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _add_scene_options(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--people", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--keypoints", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--speed-min", type=float, dest="speed_min")
    p.add_argument("--speed-max", type=float, dest="speed_max")
    p.add_argument("--noise-base", type=float, dest="noise_base")
    p.add_argument("--noise-gain", type=float, dest="noise_gain")
    p.add_argument("--occlusion-prob", type=float, dest="occlusion_prob")
    p.add_argument("--occlusion-min", type=int, dest="occlusion_min")
    p.add_argument("--occlusion-max", type=int, dest="occlusion_max")
    p.add_argument("--camera-pan", type=float, dest="camera_pan")
    p.add_argument("--miss-prob", type=float, dest="miss_prob")
    p.add_argument("--fp-rate", type=float, dest="fp_rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smctrack",
        description="Uncertainty-aware sequential Monte Carlo keypoint tracking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    p.add_argument("--config")
    p.add_argument("--out-detections", required=True)
    p.add_argument("--out-ground-truth", required=True)
    p.add_argument("--out-train", help="also write a jittered training stream")
    _add_scene_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the pose predictor")
    p.add_argument("--config")
    p.add_argument("--ground-truth", nargs="+", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--history-len", type=int, dest="history_len")
    p.add_argument("--hidden-size", type=int, dest="hidden_size")
    p.add_argument("--fc-size", type=int, dest="fc_size")
    p.add_argument("--dropout", type=float)
    p.add_argument("--leak-slope", type=float, dest="leak_slope")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", help="run the tracker on a detection stream")
    p.add_argument("--config")
    p.add_argument("--detections", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="write run statistics JSON here")
    p.add_argument("--seed", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eliteness", type=float)
    p.add_argument("--sigma-floor", type=float, dest="sigma_floor")
    p.add_argument("--sigma-ceiling", type=float, dest="sigma_ceiling")
    p.add_argument(
        "--mc-dropout", action=argparse.BooleanOptionalAction, dest="mc_dropout"
    )
    p.add_argument("--fixed-sigma", type=float, dest="fixed_sigma")
    p.add_argument(
        "--systematic-resampling",
        action=argparse.BooleanOptionalAction,
        dest="systematic_resampling",
    )
    p.add_argument("--match-threshold", type=float, dest="match_threshold")
    p.add_argument("--max-filters", type=int, dest="max_filters")
    p.add_argument("--initial-lifetime", type=int, dest="initial_lifetime")
    p.add_argument("--lifetime-cap", type=int, dest="lifetime_cap")
    p.add_argument(
        "--hungarian", action=argparse.BooleanOptionalAction, dest="hungarian"
    )
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a tracked stream against ground truth")
    p.add_argument("--tracked", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--assign-threshold", type=float, default=0.5)
    p.add_argument("--out-text")
    p.add_argument("--out-table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "ablate", help="uncertainty grid and history-length sweep over seeds"
    )
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--seeds", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--train-scenes", type=int, dest="train_scenes")
    p.add_argument("--ablate-fixed-sigma", type=float, dest="ablate_fixed_sigma")
    p.add_argument("--reuse-models", action="store_true")
    _add_scene_options(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser(
        "plot-data", help="particle-cloud table for one track at one frame"
    )
    p.add_argument("--stream", required=True, help="stream with track ids")
    p.add_argument("--model", required=True)
    p.add_argument("--track-id", type=int, required=True, dest="track_id")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main(sys.argv[1:]))
