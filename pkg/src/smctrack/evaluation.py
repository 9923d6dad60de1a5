"""MOTA-style evaluation of a tracked stream against ground truth.

Per frame, ground-truth poses are assigned to hypothesis poses greedily by
descending OKS above a threshold, preferring continuation of the previous
assignment at equal score. A switch is charged when a ground-truth
identity's assigned track id differs from its last assigned id (gaps
included); unassigned ground truths are misses, unassigned hypotheses are
false positives. Per-keypoint counters apply the same logic at keypoint
granularity within assigned pose pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import OksParams, oks_grid
from .streams import FrameStream


@dataclass
class MotCounts:
    num_switches: int = 0
    num_misses: int = 0
    num_false_positives: int = 0
    num_gt: int = 0

    @property
    def mota(self) -> float:
        errors = self.num_switches + self.num_misses + self.num_false_positives
        if self.num_gt == 0:
            return 1.0 if errors == 0 else float("-inf")
        return 1.0 - errors / self.num_gt


@dataclass
class EvalReport:
    num_switches: int
    num_misses: int
    num_false_positives: int
    num_gt: int
    mota: float
    per_keypoint: dict[int, MotCounts] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"num_switches {self.num_switches}",
            f"num_misses {self.num_misses}",
            f"num_false_positives {self.num_false_positives}",
            f"num_gt {self.num_gt}",
            f"mota {self.mota:.6f}",
        ]
        for k in sorted(self.per_keypoint):
            c = self.per_keypoint[k]
            lines.append(
                f"keypoint_{k} switches={c.num_switches} misses={c.num_misses} "
                f"false_positives={c.num_false_positives} num_gt={c.num_gt} "
                f"mota={c.mota:.6f}"
            )
        return "\n".join(lines) + "\n"

    def to_rows(self) -> list[dict]:
        rows = [
            {
                "keypoint": "all",
                "num_switches": self.num_switches,
                "num_misses": self.num_misses,
                "num_false_positives": self.num_false_positives,
                "num_gt": self.num_gt,
                "mota": self.mota,
            }
        ]
        for k in sorted(self.per_keypoint):
            c = self.per_keypoint[k]
            rows.append(
                {
                    "keypoint": k,
                    "num_switches": c.num_switches,
                    "num_misses": c.num_misses,
                    "num_false_positives": c.num_false_positives,
                    "num_gt": c.num_gt,
                    "mota": c.mota,
                }
            )
        return rows


def _keypoint_similarity(gt_pose, hyp_pose, params: OksParams) -> np.ndarray:
    """Per-keypoint Gaussian similarity, scale taken from the ground truth."""
    kappas = np.asarray(params.kappas)
    s = max(gt_pose.scale, params.scale_floor)
    d2 = np.sum((gt_pose.xy - hyp_pose.xy) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * s * s * kappas * kappas))


def evaluate(
    output: FrameStream,
    ground_truth: FrameStream,
    oks_params: OksParams | None = None,
    assign_threshold: float = 0.5,
) -> EvalReport:
    """Count switches, misses, and false positives of a tracked stream."""
    if not output.has_track_ids or not ground_truth.has_track_ids:
        raise ValueError("both streams must carry track ids")
    out_by_id = {fr.frame_id: fr for fr in output.frames}
    gt_by_id = {fr.frame_id: fr for fr in ground_truth.frames}
    if set(out_by_id) != set(gt_by_id):
        raise ValueError("output and ground truth cover different frame ids")
    if oks_params is None:
        oks_params = OksParams.default_for(ground_truth.meta.num_keypoints)
    num_kp = ground_truth.meta.num_keypoints

    total = MotCounts()
    per_kp = {k: MotCounts() for k in range(num_kp)}
    last_assigned: dict[int, int] = {}

    for frame_id in sorted(gt_by_id):
        gt_frame = gt_by_id[frame_id]
        out_frame = out_by_id[frame_id]
        gt_items = [
            (tid, pose)
            for tid, pose in zip(gt_frame.track_ids, gt_frame.poses)
            if pose.visible.any()
        ]
        hyp_items = list(zip(out_frame.track_ids, out_frame.poses))

        total.num_gt += len(gt_items)
        for _, pose in gt_items:
            for k in np.flatnonzero(pose.visible):
                per_kp[int(k)].num_gt += 1

        assignment = []  # (gt index, hyp index)
        if gt_items and hyp_items:
            gt_xy = np.stack([p.xy for _, p in gt_items])
            gt_vis = np.stack([p.visible for _, p in gt_items])
            gt_scale = np.array([p.scale for _, p in gt_items])
            hyp_xy = np.stack([p.xy for _, p in hyp_items])
            hyp_vis = np.stack([p.visible for _, p in hyp_items])
            oks = oks_grid(gt_xy, gt_vis, gt_scale, hyp_xy, hyp_vis, oks_params)

            candidates = []
            for g in range(len(gt_items)):
                for h in range(len(hyp_items)):
                    if oks[g, h] >= assign_threshold:
                        cont = last_assigned.get(gt_items[g][0]) == hyp_items[h][0]
                        candidates.append((-oks[g, h], 0 if cont else 1, g, h))
            candidates.sort()
            g_used = set()
            h_used = set()
            for _, _, g, h in candidates:
                if g in g_used or h in h_used:
                    continue
                g_used.add(g)
                h_used.add(h)
                assignment.append((g, h))

        assigned_g = {g for g, _ in assignment}
        assigned_h = {h for _, h in assignment}

        for g, h in assignment:
            gt_id, gt_pose = gt_items[g]
            hyp_id, hyp_pose = hyp_items[h]
            switched = gt_id in last_assigned and last_assigned[gt_id] != hyp_id
            if switched:
                total.num_switches += 1
            last_assigned[gt_id] = hyp_id

            sim = _keypoint_similarity(gt_pose, hyp_pose, oks_params)
            for k in range(num_kp):
                if gt_pose.visible[k]:
                    if hyp_pose.visible[k] and sim[k] >= assign_threshold:
                        if switched:
                            per_kp[k].num_switches += 1
                    else:
                        per_kp[k].num_misses += 1
                elif hyp_pose.visible[k]:
                    per_kp[k].num_false_positives += 1

        for g, (_, pose) in enumerate(gt_items):
            if g not in assigned_g:
                total.num_misses += 1
                for k in np.flatnonzero(pose.visible):
                    per_kp[int(k)].num_misses += 1
        for h, (_, pose) in enumerate(hyp_items):
            if h not in assigned_h:
                total.num_false_positives += 1
                for k in np.flatnonzero(pose.visible):
                    per_kp[int(k)].num_false_positives += 1

    return EvalReport(
        num_switches=total.num_switches,
        num_misses=total.num_misses,
        num_false_positives=total.num_false_positives,
        num_gt=total.num_gt,
        mota=total.mota,
        per_keypoint=per_kp,
    )
