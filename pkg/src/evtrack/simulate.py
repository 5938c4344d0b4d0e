"""Deterministic synthesis of event streams and exact ground truth for
rectangular robots tracing circle or square paths on a light mat.

Poses advance in fixed 1 ms micro-steps. Per step, pixels newly covered by a
dark robot footprint emit negative events and newly uncovered pixels emit
positive events; each of the ``events_per_transition`` slots fires
independently with probability equal to the robot's contrast, modeling the
burst of threshold crossings a high-contrast edge produces. Sensor noise adds
uniformly placed events of random polarity at a Poisson rate. Everything is
keyed off one 64-bit seed, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import InvalidParameter, OverlapAtStart, PathOutOfBounds
from .events import EventStream, SensorGeometry, VGA
from .metrics import FrameTruth, TruthObject, wrap_angle_deg

FULL_SPEED_MPS = 0.46
HALF_SPEED_MPS = 0.23

DEFAULT_PX_PER_CM = 2.46
DEFAULT_MAT_SIDE_PX = 450
DEFAULT_NOISE_RATE = 0.33  # sensor-wide Hz/px; matches ~0.5 Hz/px over the mat
DEFAULT_DURATION_US = 30_000_000
DEFAULT_GT_PERIOD_US = 41_667
MICRO_STEP_US = 1000
EVENTS_PER_TRANSITION = 4

# Zero-point turn rate scales with motor power: 360 deg/s at full power.
TURN_RATE_DPS_AT_FULL = 360.0


@dataclass(frozen=True)
class ArenaConfig:
    geometry: SensorGeometry = VGA
    mat_rect: tuple[int, int, int, int] = (95, 15, 545, 465)  # 450 px =~ 183 cm
    px_per_cm: float = DEFAULT_PX_PER_CM

    def __post_init__(self):
        x0, y0, x1, y1 = self.mat_rect
        if not (0 <= x0 < x1 <= self.geometry.width_px and 0 <= y0 < y1 <= self.geometry.height_px):
            raise InvalidParameter(f"mat_rect {self.mat_rect} outside sensor bounds")
        if self.px_per_cm <= 0:
            raise InvalidParameter("px_per_cm must be positive")

    @property
    def mat_center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.mat_rect
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


@dataclass(frozen=True)
class RobotSpec:
    robot_id: int
    width_px: float = 18.0
    length_px: float = 18.0
    contrast: float = 1.0

    def __post_init__(self):
        if self.width_px < 4 or self.length_px < 4:
            raise InvalidParameter("robot footprint must be at least 4 px on each side")
        if not (0.0 < self.contrast <= 1.0):
            raise InvalidParameter(f"contrast must be in (0, 1], got {self.contrast}")

    @property
    def half_diag(self) -> float:
        return math.hypot(self.width_px, self.length_px) / 2.0

    @property
    def area_px2(self) -> float:
        return self.width_px * self.length_px


@dataclass(frozen=True)
class CirclePath:
    center: tuple[float, float]
    radius_px: float

    def __post_init__(self):
        if self.radius_px < 0:
            raise InvalidParameter("radius must be >= 0")


@dataclass(frozen=True)
class SquarePath:
    corner: tuple[float, float]  # top-left corner of the axis-aligned square
    side_px: float

    def __post_init__(self):
        if self.side_px <= 0:
            raise InvalidParameter("side must be positive")


@dataclass(frozen=True)
class PathSpec:
    kind: CirclePath | SquarePath
    speed_mps: float
    phase: float = 0.0  # start offset, as a fraction of the motion cycle

    def __post_init__(self):
        if self.speed_mps <= 0:
            raise InvalidParameter("speed must be positive")


@dataclass(frozen=True)
class NoiseModel:
    rate_hz_per_px: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rate_hz_per_px < 0:
            raise InvalidParameter("noise rate must be >= 0")


class _Motion:
    """Pose as a function of time for one (RobotSpec, PathSpec) pair."""

    def __init__(self, path: PathSpec, px_per_cm: float):
        self.path = path
        self.v_px_per_us = path.speed_mps * 100.0 * px_per_cm / 1e6
        kind = path.kind
        if isinstance(kind, CirclePath):
            self.kind = "circle"
            self.center = kind.center
            self.radius = kind.radius_px
            if self.radius > 0:
                self.omega = self.v_px_per_us / self.radius  # rad/us
                self.cycle_us = 2.0 * math.pi / self.omega
            else:
                self.omega = 0.0
                self.cycle_us = math.inf
        elif isinstance(kind, SquarePath):
            self.kind = "square"
            x0, y0 = kind.corner
            s = kind.side_px
            self.corners = [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s)]
            self.headings = [0.0, 90.0, 180.0, -90.0]
            self.edge_us = s / self.v_px_per_us
            turn_rate_dps = TURN_RATE_DPS_AT_FULL * (path.speed_mps / FULL_SPEED_MPS)
            self.turn_us = 90.0 / turn_rate_dps * 1e6
            self.cycle_us = 4.0 * (self.edge_us + self.turn_us)
        else:
            raise InvalidParameter(f"unknown path kind {kind!r}")

    def pose(self, t_us: float) -> tuple[float, float, float]:
        """(x, y, heading_deg) at absolute time t."""
        if self.kind == "circle":
            if self.radius == 0.0:
                phi = 2.0 * math.pi * self.path.phase
                return self.center[0], self.center[1], wrap_angle_deg(math.degrees(phi) + 90.0)
            phi = 2.0 * math.pi * self.path.phase + self.omega * t_us
            x = self.center[0] + self.radius * math.cos(phi)
            y = self.center[1] + self.radius * math.sin(phi)
            return x, y, wrap_angle_deg(math.degrees(phi) + 90.0)
        tau = (t_us + self.path.phase * self.cycle_us) % self.cycle_us
        for i in range(4):
            if tau < self.edge_us:
                cx, cy = self.corners[i]
                nx, ny = self.corners[(i + 1) % 4]
                f = tau * self.v_px_per_us / math.dist(self.corners[i], self.corners[(i + 1) % 4])
                return cx + (nx - cx) * f, cy + (ny - cy) * f, self.headings[i]
            tau -= self.edge_us
            if tau < self.turn_us:
                x, y = self.corners[(i + 1) % 4]
                ang = self.headings[i] + 90.0 * (tau / self.turn_us)
                return x, y, wrap_angle_deg(ang)
            tau -= self.turn_us
        # numerically exact cycle boundary
        x, y = self.corners[0]
        return x, y, self.headings[0]

    def extremes(self, robot: RobotSpec) -> tuple[float, float, float, float]:
        """Conservative bounding box of the swept footprint."""
        r = robot.half_diag
        if self.kind == "circle":
            cx, cy = self.center
            return cx - self.radius - r, cy - self.radius - r, cx + self.radius + r, cy + self.radius + r
        xs = [c[0] for c in self.corners]
        ys = [c[1] for c in self.corners]
        return min(xs) - r, min(ys) - r, max(xs) + r, max(ys) + r


def simulate(
    arena: ArenaConfig,
    robots: list[tuple[RobotSpec, PathSpec]],
    noise: NoiseModel,
    duration_us: int,
    gt_period_us: int,
    events_per_transition: int = EVENTS_PER_TRANSITION,
    micro_step_us: int = MICRO_STEP_US,
) -> tuple[EventStream, list[FrameTruth]]:
    """Generate the event stream and exact truth frames for one run.

    Truth frames are emitted at k * gt_period_us for k = 1, 2, ... while
    k * gt_period_us <= duration_us, carrying each robot's exact center and
    heading (the path tangent; the interpolated angle during turns).
    """
    if duration_us <= 0:
        raise InvalidParameter("duration must be positive")
    if gt_period_us <= 0:
        raise InvalidParameter("gt_period must be positive")
    if events_per_transition < 1:
        raise InvalidParameter("events_per_transition must be >= 1")

    motions = [_Motion(path, arena.px_per_cm) for _, path in robots]
    _validate_arena(arena, robots, motions)

    n_steps = -(-duration_us // micro_step_us)
    w = arena.geometry.width_px
    h = arena.geometry.height_px

    parts_t, parts_x, parts_y, parts_p, parts_src = [], [], [], [], []

    for ridx, ((robot, _path), motion) in enumerate(zip(robots, motions)):
        poses = np.empty((n_steps + 1, 3), dtype=np.float64)
        for k in range(n_steps + 1):
            x, y, theta = motion.pose(k * micro_step_us)
            poses[k, 0] = x
            poses[k, 1] = y
            poses[k, 2] = math.radians(theta)
        seed_r = np.uint64(
            (noise.seed * 0x9E3779B97F4A7C15 + (ridx + 1) * 0xD6E8FEB86659FD93) & 0xFFFFFFFFFFFFFFFF
        )
        args = (
            poses,
            robot.width_px / 2.0,
            robot.length_px / 2.0,
            robot.contrast,
            events_per_transition,
            micro_step_us,
            w,
            h,
            seed_r,
        )
        dummy = np.empty(1, dtype=np.int64)
        dummy8 = np.empty(1, dtype=np.uint8)
        n_ev = _kernels.emit_robot_events(*args, True, dummy, dummy, dummy, dummy8)
        t = np.empty(n_ev, dtype=np.int64)
        x_ = np.empty(n_ev, dtype=np.int64)
        y_ = np.empty(n_ev, dtype=np.int64)
        p_ = np.empty(n_ev, dtype=np.uint8)
        _kernels.emit_robot_events(*args, False, t, x_, y_, p_)
        parts_t.append(t)
        parts_x.append(x_)
        parts_y.append(y_)
        parts_p.append(p_)
        parts_src.append(np.full(n_ev, ridx, dtype=np.int64))

    if noise.rate_hz_per_px > 0:
        rng = np.random.default_rng(np.random.PCG64(noise.seed))
        lam = noise.rate_hz_per_px * w * h * (micro_step_us / 1e6)
        counts = rng.poisson(lam, size=n_steps)
        total = int(counts.sum())
        ts = np.repeat(np.arange(n_steps, dtype=np.int64) * micro_step_us, counts)
        ts = ts + rng.integers(0, micro_step_us, total, dtype=np.int64)
        parts_t.append(ts)
        parts_x.append(rng.integers(0, w, total, dtype=np.int64))
        parts_y.append(rng.integers(0, h, total, dtype=np.int64))
        parts_p.append(rng.integers(0, 2, total, dtype=np.int64).astype(np.uint8))
        parts_src.append(np.full(total, len(robots), dtype=np.int64))

    if parts_t:
        t = np.concatenate(parts_t)
        x = np.concatenate(parts_x)
        y = np.concatenate(parts_y)
        p = np.concatenate(parts_p)
        src = np.concatenate(parts_src)
        keep = t < duration_us
        t, x, y, p, src = t[keep], x[keep], y[keep], p[keep], src[keep]
        order = np.lexsort((src, t))
        stream = EventStream(t[order], x[order], y[order], p[order])
    else:
        stream = EventStream.empty()

    truth = []
    k = 1
    while k * gt_period_us <= duration_us:
        t_us = k * gt_period_us
        objs = [
            TruthObject(
                gt_id=robot.robot_id,
                x=motion.pose(t_us)[0],
                y=motion.pose(t_us)[1],
                theta_deg=motion.pose(t_us)[2],
            )
            for (robot, _), motion in zip(robots, motions)
        ]
        truth.append(FrameTruth(t_us=t_us, objects=objs))
        k += 1
    return stream, truth


def _validate_arena(arena, robots, motions):
    ids = [r.robot_id for r, _ in robots]
    if len(set(ids)) != len(ids):
        raise InvalidParameter("robot ids must be unique")
    x0, y0, x1, y1 = arena.mat_rect
    for (robot, _), motion in zip(robots, motions):
        ex0, ey0, ex1, ey1 = motion.extremes(robot)
        if ex0 < x0 or ey0 < y0 or ex1 > x1 or ey1 > y1:
            raise PathOutOfBounds(
                f"robot {robot.robot_id} sweeps ({ex0:.0f},{ey0:.0f})-({ex1:.0f},{ey1:.0f}) "
                f"outside mat {arena.mat_rect}"
            )
    for i in range(len(robots)):
        for j in range(i + 1, len(robots)):
            ri, mi = robots[i][0], motions[i]
            rj, mj = robots[j][0], motions[j]
            pi = mi.pose(0)
            pj = mj.pose(0)
            if math.dist(pi[:2], pj[:2]) < ri.half_diag + rj.half_diag:
                raise OverlapAtStart(
                    f"robots {ri.robot_id} and {rj.robot_id} overlap at t=0"
                )


@dataclass(frozen=True)
class SimScenario:
    """Fully populated simulate() inputs for one benchmark run."""
    arena: ArenaConfig
    robots: list[tuple[RobotSpec, PathSpec]]
    noise: NoiseModel
    duration_us: int = DEFAULT_DURATION_US
    gt_period_us: int = DEFAULT_GT_PERIOD_US

    def run(self, **overrides) -> tuple[EventStream, list[FrameTruth]]:
        return simulate(
            self.arena, self.robots, self.noise, self.duration_us, self.gt_period_us, **overrides
        )

    def with_contrast_scale(self, factor: float) -> "SimScenario":
        """Scenario with every robot's contrast scaled (lighting analog)."""
        robots = [
            (replace(r, contrast=max(1e-6, min(1.0, r.contrast * factor))), p)
            for r, p in self.robots
        ]
        return replace(self, robots=robots)

    @property
    def n_robots(self) -> int:
        return len(self.robots)


_SCENARIO_RADII = {
    1: [150.0],
    2: [105.0, 195.0],
    3: [105.0, 150.0, 195.0],
    4: [60.0, 105.0, 150.0, 195.0],
}
_CONTRASTS = [1.0, 0.9, 0.8, 0.7]


def default_scenario(
    n_robots: int,
    pattern: str,
    power: str,
    seed: int,
    noise_rate: float = DEFAULT_NOISE_RATE,
    duration_us: int = DEFAULT_DURATION_US,
    gt_period_us: int = DEFAULT_GT_PERIOD_US,
) -> SimScenario:
    """Concentric-circle or nested-square scenario with 1..4 robots.

    Robots get distinct contrasts (1.0, 0.9, 0.8, 0.7) modeling shell-color
    variety; full power is 0.46 m/s and half power 0.23 m/s.
    """
    if not 1 <= n_robots <= 4:
        raise InvalidParameter(f"n_robots must be 1..4, got {n_robots}")
    pattern = pattern.lower()
    if pattern not in ("circle", "square"):
        raise InvalidParameter(f"pattern must be circle or square, got {pattern!r}")
    power = power.lower()
    if power not in ("full", "half"):
        raise InvalidParameter(f"power must be full or half, got {power!r}")
    speed = FULL_SPEED_MPS if power == "full" else HALF_SPEED_MPS

    arena = ArenaConfig()
    cx, cy = arena.mat_center
    robots = []
    for i in range(n_robots):
        r = _SCENARIO_RADII[n_robots][i]
        spec = RobotSpec(robot_id=i + 1, contrast=_CONTRASTS[i])
        if pattern == "circle":
            kind = CirclePath(center=(cx, cy), radius_px=r)
        else:
            kind = SquarePath(corner=(cx - r, cy - r), side_px=2.0 * r)
        robots.append((spec, PathSpec(kind=kind, speed_mps=speed, phase=i / n_robots)))
    noise = NoiseModel(rate_hz_per_px=noise_rate, seed=seed)
    return SimScenario(
        arena=arena,
        robots=robots,
        noise=noise,
        duration_us=duration_us,
        gt_period_us=gt_period_us,
    )


GT_HEADER = "t_us,robot_id,x_px,y_px,theta_deg"


def write_gt_csv(path, truth: list[FrameTruth]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(GT_HEADER + "\n")
        for frame in truth:
            for o in frame.objects:
                f.write(f"{frame.t_us},{o.gt_id},{o.x:.4f},{o.y:.4f},{o.theta_deg:.4f}\n")


def read_gt_csv(path) -> list[FrameTruth]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != GT_HEADER:
            raise InvalidParameter(f"expected header {GT_HEADER!r}, got {header!r}")
        for ln in f:
            ln = ln.strip()
            if not ln:
                continue
            t, rid, x, y, theta = ln.split(",")
            rows.append((int(t), int(rid), float(x), float(y), float(theta)))
    from .metrics import truth_frames_from_rows

    return truth_frames_from_rows(rows)
