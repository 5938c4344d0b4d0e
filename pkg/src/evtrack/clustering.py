"""Density-based clustering of event pixel coordinates.

Exact classic semantics over integer pixels: a point is core when at least
``min_pts`` points (itself included) lie within ``eps``; clusters are indexed
in order of discovery under an input-order scan, and a border point in range
of several clusters joins the earliest-discovered one. Duplicate coordinates
are kept as distinct points. Neighborhood queries run on a uniform grid with
cell size eps, so labels are identical to a naive quadratic scan but cheap
enough for the 24 Hz budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyCluster, InvalidParameter

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0:
            raise InvalidParameter(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise InvalidParameter(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class Cluster:
    member_indices: np.ndarray  # indices into the input point list, ascending
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]  # min_x, min_y, max_x, max_y
    size: int


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray  # per input point: cluster index or NOISE
    clusters: list[Cluster]


def centroid(points) -> tuple[float, float]:
    """Arithmetic mean of the member coordinates."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyCluster("centroid of zero points")
    return float(pts[:, 0].mean()), float(pts[:, 1].mean())


def bounding_box(points) -> tuple[int, int, int, int]:
    """Tightest axis-aligned rectangle: (min_x, min_y, max_x, max_y)."""
    pts = np.asarray(points).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyCluster("bounding box of zero points")
    return (
        int(pts[:, 0].min()),
        int(pts[:, 1].min()),
        int(pts[:, 0].max()),
        int(pts[:, 1].max()),
    )


def bbox_area(bbox) -> int:
    """Pixel-inclusive area: (max_x - min_x + 1) * (max_y - min_y + 1)."""
    min_x, min_y, max_x, max_y = bbox
    return (max_x - min_x + 1) * (max_y - min_y + 1)


def cluster(points, params: DbscanParams) -> Clustering:
    """Run DBSCAN over integer pixel coordinates.

    ``points`` is any (n, 2) array-like. Returns per-point labels plus the
    clusters in discovery order with centroid and bounding box.
    """
    if not isinstance(params, DbscanParams):
        params = DbscanParams(*params)
    pts = np.asarray(points, dtype=np.int64)
    if pts.size == 0:
        return Clustering(labels=np.empty(0, dtype=np.int64), clusters=[])
    pts = pts.reshape(-1, 2)
    n = len(pts)

    labels_u, inverse = _label_unique(pts, params)
    labels = labels_u[inverse]
    return Clustering(labels=labels, clusters=_build_clusters(pts, labels))


def _label_unique(pts, params):
    """Label the deduplicated pixels; returns (unique labels, inverse map)."""
    xs = pts[:, 0]
    ys = pts[:, 1]
    y_span = int(ys.max()) - int(ys.min()) + 1
    key = (xs - xs.min()).astype(np.int64) * y_span + (ys - ys.min())
    ukey, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
    nu = len(ukey)

    # representative coordinates + earliest input index per unique pixel
    first_idx = np.full(nu, len(pts), dtype=np.int64)
    np.minimum.at(first_idx, inverse, np.arange(len(pts), dtype=np.int64))
    ux = xs[first_idx]
    uy = ys[first_idx]

    # grid cells of size eps, keys shifted to stay positive under +-1 offsets
    eps = float(params.eps)
    cx = np.floor(ux / eps).astype(np.int64)
    cy = np.floor(uy / eps).astype(np.int64)
    cx -= cx.min() - 1
    cy -= cy.min() - 1
    key_mult = int(cy.max()) + 2
    cell_key = cx * key_mult + cy

    order = np.argsort(cell_key, kind="stable")
    ux_s = ux[order].astype(np.int64)
    uy_s = uy[order].astype(np.int64)
    w_s = counts[order].astype(np.int64)
    cx_s = cx[order]
    cy_s = cy[order]
    first_s = first_idx[order]
    cell_key_s = cell_key[order]

    occupied, starts = np.unique(cell_key_s, return_index=True)
    cell_start = np.append(starts, nu).astype(np.int64)

    eps2 = eps * eps
    nbr = _kernels.neighbor_weight_counts(
        ux_s, uy_s, w_s, cx_s, cy_s, key_mult, occupied, cell_start, eps2
    )
    is_core = nbr >= params.min_pts

    labels_s = np.full(nu, NOISE, dtype=np.int64)
    if is_core.any():
        roots = _kernels.union_core_components(
            ux_s, uy_s, is_core, cx_s, cy_s, key_mult, occupied, cell_start, eps2
        )
        # discovery order: rank components by the earliest core event index
        core_roots = roots[is_core]
        root_first = np.full(nu, len(pts) + 1, dtype=np.int64)
        np.minimum.at(root_first, core_roots, first_s[is_core])
        uniq_roots = np.unique(core_roots)
        rank = np.argsort(np.argsort(root_first[uniq_roots], kind="stable"))
        cluster_of_root = np.full(nu, -1, dtype=np.int64)
        cluster_of_root[uniq_roots] = rank
        core_cluster = np.where(is_core, cluster_of_root[roots], -1)
        labels_s = _kernels.border_claims(
            ux_s, uy_s, is_core, core_cluster, cx_s, cy_s, key_mult, occupied, cell_start, eps2
        )

    # undo the cell sort, then map back onto input points
    labels_u = np.empty(nu, dtype=np.int64)
    labels_u[order] = labels_s
    return labels_u, inverse


def _build_clusters(pts, labels) -> list[Cluster]:
    k = int(labels.max()) + 1 if len(labels) else 0
    if k <= 0:
        return []
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    bounds = np.searchsorted(sorted_labels, np.arange(k + 1))
    clusters = []
    for cid in range(k):
        members = order[bounds[cid]:bounds[cid + 1]]
        members = np.sort(members)
        mp = pts[members]
        cxy = (float(mp[:, 0].mean()), float(mp[:, 1].mean()))
        bb = (
            int(mp[:, 0].min()),
            int(mp[:, 1].min()),
            int(mp[:, 0].max()),
            int(mp[:, 1].max()),
        )
        clusters.append(Cluster(member_indices=members, centroid=cxy, bbox=bb, size=len(members)))
    return clusters
