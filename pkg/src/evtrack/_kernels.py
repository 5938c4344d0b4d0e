"""Numba kernels for the hot paths: grid neighbor counting, component
labeling and the simulator's per-microstep event emission.

All kernels are deterministic; randomness comes from splitmix64 counters so
results are independent of execution order.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _find_cell(cell_keys, key):
    lo, hi = 0, len(cell_keys)
    while lo < hi:
        mid = (lo + hi) >> 1
        if cell_keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(cell_keys) and cell_keys[lo] == key:
        return lo
    return -1


@njit(cache=True)
def neighbor_weight_counts(ux, uy, w, cx, cy, key_mult, cell_keys, cell_start, eps2):
    """Per unique pixel: total event count within eps (self included)."""
    n = len(ux)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        xi = ux[i]
        yi = uy[i]
        total = 0
        for dx in range(-1, 2):
            base = (cx[i] + dx) * key_mult + cy[i]
            for dy in range(-1, 2):
                c = _find_cell(cell_keys, base + dy)
                if c < 0:
                    continue
                for j in range(cell_start[c], cell_start[c + 1]):
                    ddx = ux[j] - xi
                    ddy = uy[j] - yi
                    if ddx * ddx + ddy * ddy <= eps2:
                        total += w[j]
        counts[i] = total
    return counts


@njit(cache=True)
def _uf_find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def union_core_components(ux, uy, is_core, cx, cy, key_mult, cell_keys, cell_start, eps2):
    """Union-find over mutually-in-range core pixels; returns flattened roots."""
    n = len(ux)
    parent = np.arange(n)
    for i in range(n):
        if not is_core[i]:
            continue
        xi = ux[i]
        yi = uy[i]
        for dx in range(-1, 2):
            base = (cx[i] + dx) * key_mult + cy[i]
            for dy in range(-1, 2):
                c = _find_cell(cell_keys, base + dy)
                if c < 0:
                    continue
                for j in range(cell_start[c], cell_start[c + 1]):
                    if j <= i or not is_core[j]:
                        continue
                    ddx = ux[j] - xi
                    ddy = uy[j] - yi
                    if ddx * ddx + ddy * ddy <= eps2:
                        ri = _uf_find(parent, i)
                        rj = _uf_find(parent, j)
                        if ri != rj:
                            if ri < rj:
                                parent[rj] = ri
                            else:
                                parent[ri] = rj
    for i in range(n):
        parent[i] = _uf_find(parent, i)
    return parent


@njit(cache=True)
def border_claims(ux, uy, is_core, core_cluster, cx, cy, key_mult, cell_keys, cell_start, eps2):
    """Label non-core pixels with the lowest-indexed cluster of any in-range core."""
    n = len(ux)
    label = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if is_core[i]:
            label[i] = core_cluster[i]
            continue
        xi = ux[i]
        yi = uy[i]
        best = -1
        for dx in range(-1, 2):
            base = (cx[i] + dx) * key_mult + cy[i]
            for dy in range(-1, 2):
                c = _find_cell(cell_keys, base + dy)
                if c < 0:
                    continue
                for j in range(cell_start[c], cell_start[c + 1]):
                    if not is_core[j]:
                        continue
                    ddx = ux[j] - xi
                    ddy = uy[j] - yi
                    if ddx * ddx + ddy * ddy <= eps2:
                        cl = core_cluster[j]
                        if best < 0 or cl < best:
                            best = cl
        label[i] = best
    return label


# --- deterministic counter-based RNG -----------------------------------------

@njit(cache=True)
def splitmix64(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _unit_uniform(z):
    """Map a 64-bit hash to [0, 1)."""
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def emit_robot_events(
    poses,            # (n_steps + 1, 3) float64: x, y, heading_rad at step boundaries
    half_w, half_l,   # footprint half extents across / along heading
    contrast,
    burst,            # events emitted per pixel transition
    micro_step_us,
    width_px, height_px,
    seed,
    count_only,
    out_t, out_x, out_y, out_p,
):
    """Emit events for pixels entering (negative) or leaving (positive) the
    footprint at each micro-step. Returns the number of events produced.

    Each of the ``burst`` slots per transition fires independently with
    probability ``contrast``; timestamps get sub-step jitter.
    """
    n_steps = poses.shape[0] - 1
    n_out = 0
    for k in range(n_steps):
        x0 = poses[k, 0]
        y0 = poses[k, 1]
        h0 = poses[k, 2]
        x1 = poses[k + 1, 0]
        y1 = poses[k + 1, 1]
        h1 = poses[k + 1, 2]
        if x0 == x1 and y0 == y1 and h0 == h1:
            continue
        c0 = np.cos(h0)
        s0 = np.sin(h0)
        c1 = np.cos(h1)
        s1 = np.sin(h1)
        # candidate pixels: bbox of both footprints
        r = np.sqrt(half_w * half_w + half_l * half_l) + 1.0
        xmin = int(np.floor(min(x0, x1) - r))
        xmax = int(np.ceil(max(x0, x1) + r))
        ymin = int(np.floor(min(y0, y1) - r))
        ymax = int(np.ceil(max(y0, y1) + r))
        if xmin < 0:
            xmin = 0
        if ymin < 0:
            ymin = 0
        if xmax > width_px - 1:
            xmax = width_px - 1
        if ymax > height_px - 1:
            ymax = height_px - 1
        t_base = k * micro_step_us
        for px in range(xmin, xmax + 1):
            for py in range(ymin, ymax + 1):
                dx0 = px - x0
                dy0 = py - y0
                in0 = (abs(dx0 * c0 + dy0 * s0) <= half_l) and (abs(-dx0 * s0 + dy0 * c0) <= half_w)
                dx1 = px - x1
                dy1 = py - y1
                in1 = (abs(dx1 * c1 + dy1 * s1) <= half_l) and (abs(-dx1 * s1 + dy1 * c1) <= half_w)
                if in0 == in1:
                    continue
                pol = 0 if in1 else 1  # covered -> negative, uncovered -> positive
                base_key = (
                    np.uint64(seed)
                    ^ (np.uint64(k) * np.uint64(0x9E3779B97F4A7C15))
                    ^ (np.uint64(px) * np.uint64(0xC2B2AE3D27D4EB4F))
                    ^ (np.uint64(py) * np.uint64(0x165667B19E3779F9))
                )
                for b in range(burst):
                    z = splitmix64(base_key ^ (np.uint64(b) * np.uint64(0xD6E8FEB86659FD93)))
                    if _unit_uniform(z) >= contrast:
                        continue
                    zt = splitmix64(z)
                    t = t_base + int(_unit_uniform(zt) * micro_step_us)
                    if not count_only:
                        out_t[n_out] = t
                        out_x[n_out] = px
                        out_y[n_out] = py
                        out_p[n_out] = pol
                    n_out += 1
    return n_out
