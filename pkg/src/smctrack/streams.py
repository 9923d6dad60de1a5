"""Line-delimited frame-stream files: detections, ground truth, tracked output.

One JSON object per line. The first line is a header carrying the keypoint
count, image size, format version, and free-form provenance (the config that
produced the file). Every following line is one frame. The same format
carries plain detections (no ids), ground truth, and tracker output
(``track_ids`` present).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Pose

FORMAT_VERSION = 1
_HEADER_KIND = "smctrack-frames"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


class StreamFormatError(ValueError):
    """Malformed stream file; message names the offending frame and field."""


@dataclass
class StreamMeta:
    num_keypoints: int
    image_size: tuple[int, int] = (640, 480)
    version: int = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.image_size = tuple(self.image_size)
        # canonicalize through JSON so write/read round-trips compare equal
        self.extra = json.loads(json.dumps(self.extra, default=_json_default))

    def __eq__(self, other):
        if not isinstance(other, StreamMeta):
            return NotImplemented
        return (
            self.num_keypoints == other.num_keypoints
            and tuple(self.image_size) == tuple(other.image_size)
            and self.version == other.version
            and self.extra == other.extra
        )


@dataclass
class Frame:
    frame_id: int
    poses: list[Pose]
    track_ids: list[int] | None = None

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.frame_id == other.frame_id
            and self.poses == other.poses
            and self.track_ids == other.track_ids
        )


@dataclass
class FrameStream:
    meta: StreamMeta
    frames: list[Frame] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, FrameStream):
            return NotImplemented
        return self.meta == other.meta and self.frames == other.frames

    def __len__(self):
        return len(self.frames)

    @property
    def has_track_ids(self) -> bool:
        return all(f.track_ids is not None for f in self.frames)

    def validate(self) -> None:
        last_id = None
        for frame in self.frames:
            if last_id is not None and frame.frame_id <= last_id:
                raise StreamFormatError(
                    f"frame_id {frame.frame_id}: frame ids must be strictly increasing"
                )
            last_id = frame.frame_id
            for pose in frame.poses:
                if pose.num_keypoints != self.meta.num_keypoints:
                    raise StreamFormatError(
                        f"frame_id {frame.frame_id}: pose has {pose.num_keypoints} "
                        f"keypoints, header says {self.meta.num_keypoints}"
                    )
            if frame.track_ids is not None:
                if len(frame.track_ids) != len(frame.poses):
                    raise StreamFormatError(
                        f"frame_id {frame.frame_id}: track_ids length mismatch"
                    )
                if len(set(frame.track_ids)) != len(frame.track_ids):
                    raise StreamFormatError(
                        f"frame_id {frame.frame_id}: duplicate track_ids in frame"
                    )


def _pose_to_json(pose: Pose) -> dict:
    kp = np.concatenate(
        [
            pose.xy.astype(np.float64),
            pose.visible[:, None].astype(np.float64),
            pose.confidence[:, None].astype(np.float64),
        ],
        axis=1,
    )
    return {"kp": kp.tolist(), "scale": float(pose.scale), "score": float(pose.score)}


def _pose_from_json(obj: dict, frame_id: int) -> Pose:
    try:
        kp = np.asarray(obj["kp"], dtype=np.float64).reshape(-1, 4)
        return Pose(
            xy=kp[:, :2],
            visible=kp[:, 2] != 0.0,
            confidence=kp[:, 3],
            scale=obj["scale"],
            score=obj.get("score", 1.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise StreamFormatError(f"frame_id {frame_id}: bad pose record ({exc})") from exc


def write_stream(stream: FrameStream, path: str | Path) -> None:
    stream.validate()
    header = {
        "stream": _HEADER_KIND,
        "version": stream.meta.version,
        "num_keypoints": stream.meta.num_keypoints,
        "image_size": list(stream.meta.image_size),
        "extra": stream.meta.extra,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, default=_json_default) + "\n")
        for frame in stream.frames:
            rec = {
                "frame_id": frame.frame_id,
                "poses": [_pose_to_json(p) for p in frame.poses],
                "track_ids": frame.track_ids,
            }
            fh.write(json.dumps(rec, default=_json_default) + "\n")


def read_stream(path: str | Path) -> FrameStream:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise StreamFormatError(f"{path}: empty file, missing header")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise StreamFormatError(f"{path}: malformed header line ({exc})") from exc
    if not isinstance(header, dict) or header.get("stream") != _HEADER_KIND:
        raise StreamFormatError(f"{path}: not a {_HEADER_KIND} file")
    try:
        meta = StreamMeta(
            num_keypoints=int(header["num_keypoints"]),
            image_size=tuple(header["image_size"]),
            version=int(header["version"]),
            extra=header.get("extra", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise StreamFormatError(f"{path}: bad header field ({exc})") from exc

    frames = []
    last_id = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StreamFormatError(f"{path}:{lineno}: malformed frame line ({exc})") from exc
        if "frame_id" not in rec:
            raise StreamFormatError(f"{path}:{lineno}: frame record missing frame_id")
        frame_id = int(rec["frame_id"])
        if last_id is not None and frame_id <= last_id:
            raise StreamFormatError(
                f"frame_id {frame_id}: duplicate or non-increasing frame id"
            )
        last_id = frame_id
        poses = [_pose_from_json(p, frame_id) for p in rec.get("poses", [])]
        for pose in poses:
            if pose.num_keypoints != meta.num_keypoints:
                raise StreamFormatError(
                    f"frame_id {frame_id}: pose has {pose.num_keypoints} keypoints, "
                    f"header says {meta.num_keypoints}"
                )
        track_ids = rec.get("track_ids")
        if track_ids is not None:
            track_ids = [int(t) for t in track_ids]
        frames.append(Frame(frame_id=frame_id, poses=poses, track_ids=track_ids))

    stream = FrameStream(meta=meta, frames=frames)
    stream.validate()
    return stream
