"""Per-window matching of detected cluster centroids to persistent robot
identities, with polarity-centroid association and heading estimation.

Each step clusters the window three ways (all events, positives, negatives),
walks the full-event clusters largest-first, and either claims the nearest
existing track within ``sigma_px`` or mints a new id. A track updated by an
earlier (larger) cluster in the same step is excluded from nearest-neighbor
candidacy for later clusters, so one robot's fragments cannot steal another
robot's identity. Tracks are never deleted by default: identities survive
stops and event droughts. The spatial index is rebuilt from the updated
centroids at the end of every step, which keeps the k-d ordering valid as
centroids drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kdtree
from .clustering import DbscanParams, cluster
from .errors import DegenerateHeading, EmptyTree
from .events import NEGATIVE, POSITIVE, EventWindow, SensorGeometry, VGA, split_by_polarity
from .metrics import wrap_angle_deg

DEFAULT_SIGMA_PX = 30.0
DEFAULT_MIN_PTS_FULL = 225
DEFAULT_MIN_PTS_PARTIAL = 45
DEFAULT_EPS = 15.0


@dataclass(frozen=True)
class TrackerConfig:
    sigma_px: float = DEFAULT_SIGMA_PX
    params_full: DbscanParams = field(
        default_factory=lambda: DbscanParams(DEFAULT_EPS, DEFAULT_MIN_PTS_FULL)
    )
    params_partial: DbscanParams = field(
        default_factory=lambda: DbscanParams(DEFAULT_EPS, DEFAULT_MIN_PTS_PARTIAL)
    )
    geometry: SensorGeometry = VGA
    max_age_us: int | None = None  # optional purge, disabled by default

    def __post_init__(self):
        if self.sigma_px <= 0:
            raise ValueError(f"sigma_px must be positive, got {self.sigma_px}")


@dataclass
class Track:
    id: int
    centroid: tuple[float, float]
    pos_centroid: tuple[float, float] | None = None
    neg_centroid: tuple[float, float] | None = None
    theta_deg: float | None = None
    last_seen_us: int = 0
    hits: int = 0


@dataclass
class TrackerState:
    tracks: dict[int, Track] = field(default_factory=dict)
    next_id: int = 1
    index: kdtree.KdTree2 = field(default_factory=kdtree.KdTree2)


@dataclass(frozen=True)
class Detection:
    track_id: int
    centroid: tuple[float, float]
    theta_deg: float | None
    cluster_size: int
    bbox: tuple[int, int, int, int]


@dataclass(frozen=True)
class StepResult:
    t_us: int
    detections: list[Detection]
    created_ids: list[int]
    full_cluster_count: int = 0
    pos_cluster_count: int = 0
    neg_cluster_count: int = 0


def heading(pos_centroid, neg_centroid) -> float:
    """Robot heading from the positive-cluster to negative-cluster centroid.

    Full-quadrant arctangent in image coordinates (y grows downward), degrees
    in [-180, 180): 0 points toward +x, 90 toward +y. For a dark robot on a
    light mat the leading edge emits negatives, so this vector points along
    the direction of travel.
    """
    dx = neg_centroid[0] - pos_centroid[0]
    dy = neg_centroid[1] - pos_centroid[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateHeading("coincident polarity centroids")
    return wrap_angle_deg(math.degrees(math.atan2(dy, dx)))


def match_or_create(
    state: TrackerState,
    centroid_xy,
    sigma_px: float,
    exclude=frozenset(),
) -> tuple[int, bool]:
    """Claim the nearest eligible track within sigma_px or create a new one.

    Tracks listed in ``exclude`` (already updated this step) are not
    candidates. Newly created tracks are inserted into the index at once so
    they are visible to subsequent queries within the same step.
    """
    x, y = float(centroid_xy[0]), float(centroid_xy[1])
    try:
        tid, _, dist = state.index.nearest(x, y, exclude=exclude)
    except EmptyTree:
        tid, dist = None, None
    if tid is None or dist > sigma_px:
        new_id = state.next_id
        state.next_id += 1
        state.tracks[new_id] = Track(id=new_id, centroid=(x, y))
        state.index.insert(x, y, new_id)
        return new_id, True
    state.tracks[tid].centroid = (x, y)
    return tid, False


def associate_polarity(
    state: TrackerState,
    pos_centroids,
    neg_centroids,
    sigma_px: float,
) -> dict[int, tuple[bool, bool]]:
    """Attach polarity centroids to their nearest tracks within sigma_px.

    At most one positive and one negative centroid stick per track (closest
    wins); the rest are dropped. Returns, per touched track id, which of the
    (positive, negative) centroids were updated.
    """
    touched: dict[int, tuple[bool, bool]] = {}
    if state.index.count == 0:
        return touched
    for slot, centroids in ((0, pos_centroids), (1, neg_centroids)):
        best: dict[int, tuple[float, tuple[float, float]]] = {}
        for c in centroids:
            x, y = float(c[0]), float(c[1])
            tid, _, dist = state.index.nearest(x, y)
            if dist <= sigma_px and (tid not in best or dist < best[tid][0]):
                best[tid] = (dist, (x, y))
        for tid, (_, cxy) in best.items():
            track = state.tracks[tid]
            if slot == 0:
                track.pos_centroid = cxy
            else:
                track.neg_centroid = cxy
            flags = touched.get(tid, (False, False))
            touched[tid] = (flags[0] or slot == 0, flags[1] or slot == 1)
    return touched


def step(
    state: TrackerState,
    window: EventWindow,
    config: TrackerConfig,
) -> tuple[TrackerState, StepResult]:
    """Advance the tracker by one accumulation window."""
    positives, negatives, full = split_by_polarity(window)

    cl_full = cluster(full.xy(), config.params_full)
    cl_pos = cluster(positives.xy(), config.params_partial)
    cl_neg = cluster(negatives.xy(), config.params_partial)

    ordered = sorted(
        cl_full.clusters,
        key=lambda c: (-c.size, c.centroid[0], c.centroid[1]),
    )

    updated: set[int] = set()
    created: list[int] = []
    touch_order: list[int] = []
    last_claim: dict[int, tuple[int, tuple]] = {}
    for cl in ordered:
        tid, was_created = match_or_create(state, cl.centroid, config.sigma_px, exclude=updated)
        track = state.tracks[tid]
        track.last_seen_us = window.t_end_us
        track.hits += 1
        if was_created:
            created.append(tid)
        else:
            updated.add(tid)
        if tid not in last_claim:
            touch_order.append(tid)
        last_claim[tid] = (cl.size, cl.bbox)

    # Final index for this step; polarity association then sees the
    # positions the matching phase produced.
    state.index = kdtree.rebuild(
        (t.centroid[0], t.centroid[1], t.id) for t in state.tracks.values()
    )

    pol_touched = associate_polarity(
        state,
        [c.centroid for c in cl_pos.clusters],
        [c.centroid for c in cl_neg.clusters],
        config.sigma_px,
    )
    for tid in pol_touched:
        track = state.tracks[tid]
        if track.pos_centroid is not None and track.neg_centroid is not None:
            try:
                track.theta_deg = heading(track.pos_centroid, track.neg_centroid)
            except DegenerateHeading:
                pass  # keep the previous estimate

    if config.max_age_us is not None:
        cutoff = window.t_end_us - config.max_age_us
        stale = [tid for tid, t in state.tracks.items() if t.last_seen_us < cutoff]
        if stale:
            for tid in stale:
                del state.tracks[tid]
            state.index = kdtree.rebuild(
                (t.centroid[0], t.centroid[1], t.id) for t in state.tracks.values()
            )

    detections = []
    for tid in touch_order:
        track = state.tracks[tid]
        size, bbox = last_claim[tid]
        detections.append(
            Detection(
                track_id=tid,
                centroid=track.centroid,
                theta_deg=track.theta_deg,
                cluster_size=size,
                bbox=bbox,
            )
        )
    result = StepResult(
        t_us=window.t_end_us,
        detections=detections,
        created_ids=created,
        full_cluster_count=len(cl_full.clusters),
        pos_cluster_count=len(cl_pos.clusters),
        neg_cluster_count=len(cl_neg.clusters),
    )
    return state, result


class RobotTracker:
    """Stateful wrapper: feed windows in close-time order, collect results."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.state = TrackerState()

    def step(self, window: EventWindow) -> StepResult:
        self.state, result = step(self.state, window, self.config)
        return result

    @property
    def track_ids(self) -> list[int]:
        return sorted(self.state.tracks)


TRACKS_HEADER = "t_us,track_id,x_px,y_px,theta_deg,cluster_size"


def write_tracks_csv(path, results: list[StepResult]) -> None:
    """One row per detection; theta_deg is empty while unknown."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(TRACKS_HEADER + "\n")
        for res in results:
            for d in res.detections:
                theta = "" if d.theta_deg is None else f"{d.theta_deg:.4f}"
                f.write(
                    f"{res.t_us},{d.track_id},{d.centroid[0]:.4f},{d.centroid[1]:.4f},"
                    f"{theta},{d.cluster_size}\n"
                )


def read_tracks_csv(path) -> list[tuple[int, int, float, float, float | None, int]]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != TRACKS_HEADER:
            raise ValueError(f"expected header {TRACKS_HEADER!r}, got {header!r}")
        for ln in f:
            ln = ln.strip()
            if not ln:
                continue
            t, tid, x, y, theta, size = ln.split(",")
            rows.append(
                (
                    int(t),
                    int(tid),
                    float(x),
                    float(y),
                    float(theta) if theta else None,
                    int(size),
                )
            )
    return rows
