"""End-to-end runs: stream -> windows -> tracker -> evaluation, plus the
parameter-sweep machinery behind the CLI and the benchmark scenarios.

Runs against simulated scenarios align the window grid to the ground-truth
clock: windows start at (t_a/2) mod step so every window's measurement
midpoint (its close time minus t_a/2) lands exactly on a truth frame, and the
evaluation holds each track's latest measurement. Without this a detection
made from a trailing window would be compared against ground truth half a
window ahead of what the sensor actually saw.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import DbscanParams, bbox_area
from .config import RunConfig
from .errors import EvtrackError, InvalidParameter
from .events import EventStream, iter_windows
from .metrics import (
    EvalReport,
    FrameTruth,
    MatchConfig,
    evaluate_run,
    hypothesis_from_tracks,
    n_avg_clusters,
)
from .simulate import SimScenario, default_scenario
from .tracking import RobotTracker, StepResult, TrackerConfig


def tracker_config_from(cfg: RunConfig) -> TrackerConfig:
    return TrackerConfig(
        sigma_px=cfg.sigma_px,
        params_full=DbscanParams(cfg.eps, cfg.min_pts_full),
        params_partial=DbscanParams(cfg.eps, cfg.min_pts_partial),
        geometry=cfg.geometry,
    )


@dataclass
class PipelineStats:
    window_event_counts: list[int] = field(default_factory=list)
    window_times_s: list[float] = field(default_factory=list)

    def latency_percentiles(self) -> dict:
        if not self.window_times_s:
            return {"p50_ms": 0.0, "p95_ms": 0.0, "max_ms": 0.0}
        t = np.asarray(self.window_times_s) * 1e3
        return {
            "p50_ms": float(np.percentile(t, 50)),
            "p95_ms": float(np.percentile(t, 95)),
            "max_ms": float(t.max()),
        }


def run_tracker_on_stream(
    stream: EventStream,
    cfg: RunConfig,
    collect_stats: bool = False,
) -> tuple[list[StepResult], PipelineStats]:
    """Window the stream and drive every window through the tracker in order."""
    tracker = RobotTracker(tracker_config_from(cfg))
    results = []
    stats = PipelineStats()
    for window in iter_windows(stream, cfg.t_a_us, cfg.step_us, cfg.t_start_us):
        t0 = time.perf_counter() if collect_stats else 0.0
        results.append(tracker.step(window))
        if collect_stats:
            stats.window_times_s.append(time.perf_counter() - t0)
            stats.window_event_counts.append(len(window))
    return results, stats


def detection_rows(results: list[StepResult]) -> list[tuple]:
    """(t_us, track_id, x, y, theta) rows in emission order."""
    return [
        (res.t_us, d.track_id, d.centroid[0], d.centroid[1], d.theta_deg)
        for res in results
        for d in res.detections
    ]


def aligned_config(cfg: RunConfig) -> RunConfig:
    """Start windows so measurement midpoints land on the truth-frame grid."""
    return replace(
        cfg,
        t_start_us=(cfg.t_a_us // 2) % cfg.step_us,
        latency_us=cfg.t_a_us // 2,
    )


@dataclass
class ScenarioResult:
    report: EvalReport
    results: list[StepResult]
    truth: list[FrameTruth]
    n_avg_clusters: float
    a_ratio: float
    track_ids: list[int]

    def metric_values(self) -> dict:
        d = self.report.to_json_dict()
        d["n_avg_clusters"] = self.n_avg_clusters
        d["a_ratio"] = self.a_ratio
        return d


def run_scenario(
    scenario: SimScenario,
    cfg: RunConfig | None = None,
    align: bool = True,
) -> ScenarioResult:
    """Simulate, track and evaluate one scenario."""
    cfg = cfg or RunConfig()
    if align:
        cfg = aligned_config(cfg)
    stream, truth = scenario.run()
    results, _ = run_tracker_on_stream(stream, cfg)
    report = evaluate_scenario_results(scenario, truth, results, cfg)

    counts = [res.full_cluster_count for res in results]
    navg = n_avg_clusters(counts, scenario.n_robots) if counts else 0.0
    areas = [
        bbox_area(d.bbox)
        for res in results
        for d in res.detections
    ]
    mean_robot_area = float(np.mean([r.area_px2 for r, _ in scenario.robots]))
    aratio = float(np.mean(areas)) / mean_robot_area if areas else 0.0

    ids = sorted({d.track_id for res in results for d in res.detections})
    return ScenarioResult(
        report=report,
        results=results,
        truth=truth,
        n_avg_clusters=navg,
        a_ratio=aratio,
        track_ids=ids,
    )


def evaluate_scenario_results(
    scenario: SimScenario,
    truth: list[FrameTruth],
    results: list[StepResult],
    cfg: RunConfig,
) -> EvalReport:
    rows = detection_rows(results)
    hyp = hypothesis_from_tracks(rows, [f.t_us for f in truth], latency_us=cfg.latency_us)
    match_cfg = MatchConfig(t_match_px=cfg.t_match_px, px_per_cm=cfg.px_per_cm)
    return evaluate_run(truth, hyp, match_cfg)


# --- parameter sweeps ---------------------------------------------------------

SWEEP_PARAMETERS = ("min_pts_full", "min_pts_partial", "t_a_us", "eps", "sigma_px", "noise_rate")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: list[float]
    n_robots: int = 1
    pattern: str = "circle"
    power: str = "full"
    repeats: int = 3
    seed_base: int = 0
    duration_us: int = 30_000_000

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise InvalidParameter(
                f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}"
            )
        if not self.values:
            raise InvalidParameter("sweep needs at least one value")
        if self.repeats < 1:
            raise InvalidParameter("repeats must be >= 1")


def parse_sweep_values(text: str) -> list[float]:
    """Either 'v1,v2,v3' or 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidParameter(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise InvalidParameter("range step must be positive")
        out = []
        v = start
        while v <= stop + 1e-9:
            out.append(v)
            v += step
        return out
    return [float(v) for v in text.split(",") if v.strip()]


def sweep_cell(spec: SweepSpec, value: float, repeat: int) -> dict:
    """One simulate+track+evaluate cycle; returns metric -> value."""
    seed = spec.seed_base + repeat
    noise_rate = None
    cfg = RunConfig(seed=seed)
    if spec.parameter == "noise_rate":
        noise_rate = float(value)
    else:
        cast = int if spec.parameter in ("min_pts_full", "min_pts_partial", "t_a_us") else float
        cfg = replace(cfg, **{spec.parameter: cast(value)})
    scenario = default_scenario(
        spec.n_robots,
        spec.pattern,
        spec.power,
        seed=seed,
        duration_us=spec.duration_us,
        **({"noise_rate": noise_rate} if noise_rate is not None else {}),
    )
    result = run_scenario(scenario, cfg)
    return result.metric_values()


def _sweep_cell_task(args):
    spec, value, repeat = args
    try:
        return value, repeat, sweep_cell(spec, value, repeat), None
    except EvtrackError as exc:
        return value, repeat, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[tuple[float, int, str, float]]:
    """Long-format rows (param_value, repeat, metric, value) for every cell.

    A failed cell contributes a single ``error = 1`` row and the sweep
    continues.
    """
    cells = [(spec, v, r) for v in spec.values for r in range(spec.repeats)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_cell_task, cells))
    else:
        outcomes = [_sweep_cell_task(c) for c in cells]

    rows = []
    for value, repeat, metrics_dict, err in outcomes:
        if err is not None:
            rows.append((value, repeat, "error", 1.0))
            continue
        for metric, mv in sorted(metrics_dict.items()):
            if mv is None:
                continue
            rows.append((value, repeat, metric, float(mv)))
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("param_value,repeat,metric,value\n")
        for value, repeat, metric, mv in rows:
            f.write(f"{value:g},{repeat},{metric},{mv:.6g}\n")
