"""Planar alignment between two camera frames from four point correspondences.

Solves the 8x8 direct linear system by Gaussian elimination with partial
pivoting and normalizes h33 = 1, so the four defining correspondences
reproject exactly (to rounding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, InvalidParameter, PointAtInfinity

_AREA_TOL = 1e-9
_W_TOL = 1e-12


@dataclass(frozen=True)
class Homography:
    h: np.ndarray  # 3x3, h[2,2] == 1

    def __post_init__(self):
        m = np.asarray(self.h, dtype=np.float64)
        if m.shape != (3, 3):
            raise InvalidParameter("homography matrix must be 3x3")
        if abs(np.linalg.det(m)) <= _W_TOL:
            raise DegenerateConfiguration("homography matrix is singular")
        object.__setattr__(self, "h", m)


def solve_homography(src, dst) -> Homography:
    """H mapping each of 4 src points onto the corresponding dst point.

    Raises DegenerateConfiguration when any three points of either quad are
    collinear or the system is numerically singular.
    """
    s = np.asarray(src, dtype=np.float64).reshape(4, 2)
    d = np.asarray(dst, dtype=np.float64).reshape(4, 2)
    _check_no_three_collinear(s, "src")
    _check_no_three_collinear(d, "dst")

    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for i in range(4):
        x, y = s[i]
        u, v = d[i]
        a[2 * i] = (x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y)
        b[2 * i] = u
        a[2 * i + 1] = (0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y)
        b[2 * i + 1] = v
    sol = _solve_partial_pivot(a, b)
    h = np.append(sol, 1.0).reshape(3, 3)
    return Homography(h)


def apply(h: Homography, point) -> tuple[float, float]:
    """Apply the perspective map to one (x, y) point."""
    m = h.h if isinstance(h, Homography) else np.asarray(h, dtype=np.float64)
    x, y = float(point[0]), float(point[1])
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) <= _W_TOL:
        raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
    return (
        (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
        (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w,
    )


def apply_many(h: Homography, points: np.ndarray) -> np.ndarray:
    """Vectorized apply over an (n, 2) array."""
    m = h.h
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    w = m[2, 0] * pts[:, 0] + m[2, 1] * pts[:, 1] + m[2, 2]
    if (np.abs(w) <= _W_TOL).any():
        raise PointAtInfinity("some points map to infinity")
    out = np.empty_like(pts)
    out[:, 0] = (m[0, 0] * pts[:, 0] + m[0, 1] * pts[:, 1] + m[0, 2]) / w
    out[:, 1] = (m[1, 0] * pts[:, 0] + m[1, 1] * pts[:, 1] + m[1, 2]) / w
    return out


def inverse(h: Homography) -> Homography:
    inv = np.linalg.inv(h.h)
    if abs(inv[2, 2]) <= _W_TOL:
        raise DegenerateConfiguration("inverse cannot be normalized")
    return Homography(inv / inv[2, 2])


def compose(h2: Homography, h1: Homography) -> Homography:
    """Map equivalent to applying h1 first, then h2."""
    m = h2.h @ h1.h
    if abs(m[2, 2]) <= _W_TOL:
        raise DegenerateConfiguration("composition cannot be normalized")
    return Homography(m / m[2, 2])


def load_correspondences(path) -> tuple[np.ndarray, np.ndarray]:
    """Read the 8-line correspondences file: 4 src rows then 4 dst rows."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for ln in f:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split(",")
            if len(parts) != 2:
                raise InvalidParameter(f"expected 'x,y' rows, got {ln!r}")
            rows.append((float(parts[0]), float(parts[1])))
    if len(rows) != 8:
        raise InvalidParameter(f"expected 8 correspondence rows, got {len(rows)}")
    pts = np.asarray(rows, dtype=np.float64)
    return pts[:4], pts[4:]


def _check_no_three_collinear(quad: np.ndarray, name: str) -> None:
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                v1 = quad[j] - quad[i]
                v2 = quad[k] - quad[i]
                area2 = abs(v1[0] * v2[1] - v1[1] * v2[0])
                if area2 <= 2 * _AREA_TOL:
                    raise DegenerateConfiguration(
                        f"{name} points {i},{j},{k} are collinear"
                    )


def _solve_partial_pivot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a copy of (a, b)."""
    a = a.copy()
    b = b.copy()
    n = len(b)
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) <= _W_TOL:
            raise DegenerateConfiguration("singular system")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        inv = 1.0 / a[col, col]
        for row in range(col + 1, n):
            f = a[row, col] * inv
            if f != 0.0:
                a[row, col:] -= f * a[col, col:]
                b[row] -= f * b[col]
    x = np.zeros(n, dtype=np.float64)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x
