"""Detection and tracking evaluation: frame correspondence, precision/recall,
distance and heading MAE, MOTA, and the cluster-quality ratios.

Correspondence follows the CLEAR procedure: matches from the previous frame
are carried forward while still within the gate, remaining pairs are matched
greedily by ascending distance, and a ground-truth object re-paired with a
different hypothesis than its last recorded one counts a single mismatch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FrameAlignmentError,
    InvalidParameter,
    NoGroundTruth,
    NoHeadings,
    NoMatches,
)


@dataclass(frozen=True)
class TruthObject:
    gt_id: int
    x: float
    y: float
    theta_deg: float


@dataclass(frozen=True)
class HypObject:
    track_id: int
    x: float
    y: float
    theta_deg: float | None = None


@dataclass(frozen=True)
class FrameTruth:
    t_us: int
    objects: list[TruthObject]


@dataclass(frozen=True)
class FrameHypothesis:
    t_us: int
    objects: list[HypObject]


@dataclass(frozen=True)
class MatchConfig:
    t_match_px: float = 30.0
    px_per_cm: float = 2.46

    def __post_init__(self):
        if self.t_match_px <= 0 or self.px_per_cm <= 0:
            raise InvalidParameter("match threshold and scale must be positive")


@dataclass
class FrameMatches:
    t_us: int
    pairs: list[tuple[TruthObject, HypObject, float]]  # matched pair + distance (px)
    missed_ids: list[int]
    false_positive_ids: list[int]
    mismatches: int
    n_truth: int

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fn(self) -> int:
        return len(self.missed_ids)

    @property
    def fp(self) -> int:
        return len(self.false_positive_ids)


def wrap_angle_deg(a: float) -> float:
    """Wrap to [-180, 180)."""
    return (a + 180.0) % 360.0 - 180.0


def angular_error_deg(a: float, b: float) -> float:
    """Wrapped absolute difference, in [0, 180]."""
    return abs(wrap_angle_deg(a - b))


def correspond(
    truth: list[FrameTruth],
    hyp: list[FrameHypothesis],
    cfg: MatchConfig,
) -> list[FrameMatches]:
    """Match per-frame objects; frames are paired by equal timestamps."""
    if len(truth) != len(hyp):
        raise FrameAlignmentError(
            f"{len(truth)} truth frames vs {len(hyp)} hypothesis frames"
        )
    prev_pairs: list[tuple[int, int]] = []
    memory: dict[int, int] = {}  # gt_id -> last matched track_id
    out = []
    for ft, fh in zip(truth, hyp):
        if ft.t_us != fh.t_us:
            raise FrameAlignmentError(f"frame times differ: {ft.t_us} vs {fh.t_us}")
        gt_by_id = {o.gt_id: o for o in ft.objects}
        hy_by_id = {o.track_id: o for o in fh.objects}
        if len(gt_by_id) != len(ft.objects):
            raise FrameAlignmentError(f"duplicate gt ids in frame {ft.t_us}")
        if len(hy_by_id) != len(fh.objects):
            raise FrameAlignmentError(f"duplicate track ids in frame {fh.t_us}")

        pairs: list[tuple[TruthObject, HypObject, float]] = []
        used_gt: set[int] = set()
        used_hy: set[int] = set()

        # (a) carry forward still-valid pairs from the previous frame
        for g, h in prev_pairs:
            go = gt_by_id.get(g)
            ho = hy_by_id.get(h)
            if go is None or ho is None:
                continue
            d = math.hypot(go.x - ho.x, go.y - ho.y)
            if d <= cfg.t_match_px:
                pairs.append((go, ho, d))
                used_gt.add(g)
                used_hy.add(h)

        # (b) greedy matching of the remainder by ascending distance
        candidates = []
        for go in ft.objects:
            if go.gt_id in used_gt:
                continue
            for ho in fh.objects:
                if ho.track_id in used_hy:
                    continue
                d = math.hypot(go.x - ho.x, go.y - ho.y)
                if d <= cfg.t_match_px:
                    candidates.append((d, go.gt_id, ho.track_id, go, ho))
        candidates.sort(key=lambda c: (c[0], c[1], c[2]))
        for d, g, h, go, ho in candidates:
            if g in used_gt or h in used_hy:
                continue
            pairs.append((go, ho, d))
            used_gt.add(g)
            used_hy.add(h)

        # (c) mismatches: pairing changed against the recorded mapping
        mme = 0
        for go, ho, _ in pairs:
            last = memory.get(go.gt_id)
            if last is not None and last != ho.track_id:
                mme += 1
            memory[go.gt_id] = ho.track_id

        out.append(
            FrameMatches(
                t_us=ft.t_us,
                pairs=pairs,
                missed_ids=[o.gt_id for o in ft.objects if o.gt_id not in used_gt],
                false_positive_ids=[o.track_id for o in fh.objects if o.track_id not in used_hy],
                mismatches=mme,
                n_truth=len(ft.objects),
            )
        )
        prev_pairs = [(go.gt_id, ho.track_id) for go, ho, _ in pairs]
    return out


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    """TP/(TP+FP) and TP/(TP+FN); an empty denominator counts as perfect."""
    precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    return precision, recall


def mae_distance(frames: list[FrameMatches], px_per_cm: float) -> float:
    """Mean Euclidean distance over all matched pairs, in centimeters."""
    if px_per_cm <= 0:
        raise InvalidParameter("px_per_cm must be positive")
    dists = [d for fm in frames for (_, _, d) in fm.pairs]
    if not dists:
        raise NoMatches("no matched pairs")
    return float(np.mean(dists)) / px_per_cm


def mae_theta(frames: list[FrameMatches]) -> float:
    """Mean wrapped absolute heading difference over pairs carrying both headings."""
    errs = [
        angular_error_deg(ho.theta_deg, go.theta_deg)
        for fm in frames
        for (go, ho, _) in fm.pairs
        if ho.theta_deg is not None and go.theta_deg is not None
    ]
    if not errs:
        raise NoHeadings("no matched pairs with headings on both sides")
    return float(np.mean(errs))


def mota(frames: list[FrameMatches]) -> float:
    """1 - (misses + false positives + mismatches) / ground-truth count."""
    g = sum(fm.n_truth for fm in frames)
    if g == 0:
        raise NoGroundTruth("no ground-truth objects in any frame")
    bad = sum(fm.fn + fm.fp + fm.mismatches for fm in frames)
    return 1.0 - bad / g


def n_avg_clusters(cluster_counts, n_robots: int) -> float:
    """Mean clusters detected per robot per frame."""
    if n_robots < 1:
        raise InvalidParameter(f"n_robots must be >= 1, got {n_robots}")
    counts = np.asarray(list(cluster_counts), dtype=np.float64)
    if counts.size == 0:
        return 0.0
    return float(np.mean(counts / n_robots))


def a_ratio(bbox_area_px2: float, actual_area_px2: float) -> float:
    """Detected bounding-box area over true chassis area (ideal 1)."""
    if actual_area_px2 <= 0:
        raise InvalidParameter("actual area must be positive")
    if bbox_area_px2 < 0:
        raise InvalidParameter("detected area must be non-negative")
    return bbox_area_px2 / actual_area_px2


@dataclass
class EvalReport:
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    mae_distance_cm: float | None
    mae_theta_deg: float | None
    mota: float
    misses: int
    false_positives: int
    mismatches: int
    gt_total: int
    n_frames: int
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        d = {
            "precision": self.precision,
            "recall": self.recall,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "mae_distance_cm": self.mae_distance_cm,
            "mae_theta_deg": self.mae_theta_deg,
            "mota": self.mota,
            "misses": self.misses,
            "false_positives": self.false_positives,
            "mismatches": self.mismatches,
            "gt_total": self.gt_total,
            "n_frames": self.n_frames,
        }
        d.update(self.extras)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def evaluate_run(
    truth: list[FrameTruth],
    hyp: list[FrameHypothesis],
    cfg: MatchConfig,
) -> EvalReport:
    """Full evaluation of one run: correspondence plus all summary metrics."""
    frames = correspond(truth, hyp, cfg)
    tp = sum(fm.tp for fm in frames)
    fp = sum(fm.fp for fm in frames)
    fn = sum(fm.fn for fm in frames)
    mme = sum(fm.mismatches for fm in frames)
    gt_total = sum(fm.n_truth for fm in frames)
    precision, recall = precision_recall(tp, fp, fn)
    try:
        mae_d = mae_distance(frames, cfg.px_per_cm)
    except NoMatches:
        mae_d = None
    try:
        mae_t = mae_theta(frames)
    except NoHeadings:
        mae_t = None
    mota_value = 1.0 - (fn + fp + mme) / gt_total if gt_total > 0 else 1.0
    return EvalReport(
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        fn=fn,
        mae_distance_cm=mae_d,
        mae_theta_deg=mae_t,
        mota=mota_value,
        misses=fn,
        false_positives=fp,
        mismatches=mme,
        gt_total=gt_total,
        n_frames=len(frames),
    )


def hypothesis_from_tracks(
    rows,
    frame_times,
    latency_us: int = 0,
) -> list[FrameHypothesis]:
    """Sample-and-hold adapter from detection rows to per-frame hypotheses.

    ``rows`` are (t_us, track_id, x, y, theta_deg_or_None) detections sorted
    by time. For each requested frame time T, every track contributes its
    latest detection whose measurement time (row time minus ``latency_us``)
    is <= T. Tracks are never dropped once seen: the tracker keeps identities
    through event droughts, and the evaluation sees the same persistence.
    ``latency_us`` accounts for the accumulation window: a detection made
    from a trailing window represents the scene half a window earlier.
    """
    rows = sorted(rows, key=lambda r: (r[0], r[1]))
    out = []
    held: dict[int, tuple] = {}
    i = 0
    n = len(rows)
    for t in frame_times:
        while i < n and rows[i][0] - latency_us <= t:
            held[rows[i][1]] = rows[i]
            i += 1
        objs = [
            HypObject(track_id=tid, x=r[2], y=r[3], theta_deg=r[4])
            for tid, r in sorted(held.items())
        ]
        out.append(FrameHypothesis(t_us=int(t), objects=objs))
    return out


def truth_frames_from_rows(rows) -> list[FrameTruth]:
    """Group (t_us, gt_id, x, y, theta_deg) rows into FrameTruth objects."""
    frames: dict[int, list[TruthObject]] = {}
    for t, gid, x, y, theta in rows:
        frames.setdefault(int(t), []).append(
            TruthObject(gt_id=int(gid), x=float(x), y=float(y), theta_deg=float(theta))
        )
    return [FrameTruth(t_us=t, objects=frames[t]) for t in sorted(frames)]
