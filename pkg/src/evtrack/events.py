"""Event data model, stream parsing, time windowing and polarity splitting.

Events are kept in column form (numpy arrays) for speed; `Event` records are
materialized lazily when individual elements are accessed.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CoordinateOutOfRange,
    InvalidParameter,
    MalformedRecord,
    MissingHeader,
    NonMonotonicTimestamp,
)

POSITIVE = 1
NEGATIVE = 0

CSV_HEADER = "t_us,x,y,p"

# Detection cadence of 24 Hz and a 100 ms trailing accumulation span.
DEFAULT_STEP_US = 41_667
DEFAULT_T_A_US = 100_000


@dataclass(frozen=True)
class SensorGeometry:
    width_px: int = 640
    height_px: int = 480

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise InvalidParameter(f"sensor geometry must be positive, got {self.width_px}x{self.height_px}")


VGA = SensorGeometry(640, 480)


@dataclass(frozen=True)
class Event:
    """One polarity change at a pixel: microsecond timestamp, position, sign."""
    t_us: int
    x: int
    y: int
    polarity: int  # POSITIVE or NEGATIVE


class EventStream(Sequence):
    """Ordered events in column form: int64 timestamps, int32 coords, uint8 polarity."""

    __slots__ = ("t", "x", "y", "p")

    def __init__(self, t, x, y, p):
        self.t = np.asarray(t, dtype=np.int64)
        self.x = np.asarray(x, dtype=np.int32)
        self.y = np.asarray(y, dtype=np.int32)
        self.p = np.asarray(p, dtype=np.uint8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise InvalidParameter("event columns must have equal length")

    @classmethod
    def empty(cls) -> "EventStream":
        return cls([], [], [], [])

    @classmethod
    def from_records(cls, records: Iterable[tuple]) -> "EventStream":
        rows = list(records)
        if not rows:
            return cls.empty()
        arr = np.asarray(rows, dtype=np.int64)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return EventStream(self.t[i], self.x[i], self.y[i], self.p[i])
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def select(self, mask_or_idx) -> "EventStream":
        return EventStream(
            self.t[mask_or_idx], self.x[mask_or_idx], self.y[mask_or_idx], self.p[mask_or_idx]
        )

    def xy(self) -> np.ndarray:
        """(n, 2) int array of pixel coordinates."""
        return np.column_stack((self.x, self.y))


@dataclass(frozen=True)
class EventWindow:
    """Events accumulated over the trailing t_a_us microseconds up to t_end_us.

    Contains exactly the events with t_end_us - t_a_us < t_us <= t_end_us,
    in stream order.
    """
    t_end_us: int
    t_a_us: int
    events: EventStream

    def __len__(self) -> int:
        return len(self.events)


def parse_event_stream(source, geometry: SensorGeometry = VGA) -> EventStream:
    """Parse the event CSV (header ``t_us,x,y,p``) into an EventStream.

    ``source`` may be a path, text, or a file-like object. The whole stream
    is rejected on the first malformed record, out-of-range coordinate or
    timestamp decrease.
    """
    text = _read_text(source)
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        found = lines[0].strip() if lines else "<empty>"
        raise MissingHeader(f"expected header {CSV_HEADER!r}, found {found!r}")

    body = [ln for ln in lines[1:] if ln.strip()]
    if not body:
        return EventStream.empty()

    n = len(body)
    try:
        # Fast path; falls back to the per-line loop for a precise error.
        cols = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", dtype=np.int64, ndmin=2)
        if cols.shape != (n, 4):
            raise ValueError
    except ValueError:
        cols = np.empty((n, 4), dtype=np.int64)
        for i, ln in enumerate(body):
            parts = ln.split(",")
            if len(parts) != 4:
                raise MalformedRecord(f"line {i + 2}: expected 4 fields, got {len(parts)}")
            try:
                for j in range(4):
                    cols[i, j] = int(parts[j])
            except ValueError:
                raise MalformedRecord(f"line {i + 2}: non-integer field in {ln!r}") from None

    t, x, y, p = cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3]
    bad_p = (p != 0) & (p != 1)
    if bad_p.any():
        i = int(np.argmax(bad_p))
        raise MalformedRecord(f"line {i + 2}: polarity must be 0 or 1, got {p[i]}")
    if (t < 0).any():
        i = int(np.argmax(t < 0))
        raise MalformedRecord(f"line {i + 2}: negative timestamp {t[i]}")
    oob = (x < 0) | (x >= geometry.width_px) | (y < 0) | (y >= geometry.height_px)
    if oob.any():
        i = int(np.argmax(oob))
        raise CoordinateOutOfRange(
            f"line {i + 2}: ({x[i]}, {y[i]}) outside {geometry.width_px}x{geometry.height_px}"
        )
    if n > 1:
        dec = np.diff(t) < 0
        if dec.any():
            i = int(np.argmax(dec))
            raise NonMonotonicTimestamp(
                f"line {i + 3}: timestamp {t[i + 1]} decreases after {t[i]}"
            )
    return EventStream(t, x, y, p)


def serialize_events(stream: EventStream) -> str:
    """Inverse of parse_event_stream: canonical CSV text with LF endings."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for i in range(len(stream)):
        out.write(f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.p[i]}\n")
    return out.getvalue()


def write_event_csv(path, stream: EventStream) -> None:
    n = len(stream)
    cols = np.empty((n, 4), dtype=np.int64)
    cols[:, 0] = stream.t
    cols[:, 1] = stream.x
    cols[:, 2] = stream.y
    cols[:, 3] = stream.p
    with open(path, "wb") as f:
        f.write((CSV_HEADER + "\n").encode())
        np.savetxt(f, cols, fmt="%d", delimiter=",", newline="\n")


def window_events(
    stream: EventStream,
    t_a_us: int = DEFAULT_T_A_US,
    step_us: int = DEFAULT_STEP_US,
    t_start_us: int = 0,
) -> list[EventWindow]:
    """Slice a stream into trailing windows closing at t_start_us + k*step_us.

    Window k contains exactly the events in (t_end - t_a, t_end]; windows are
    emitted for k = 1, 2, ... until the whole stream is covered, including
    empty ones in the interior.
    """
    if t_a_us <= 0:
        raise InvalidParameter(f"t_a_us must be positive, got {t_a_us}")
    if step_us <= 0:
        raise InvalidParameter(f"step_us must be positive, got {step_us}")
    if len(stream) == 0:
        return []
    t_max = int(stream.t[-1])
    n_windows = max(1, -(-(t_max - t_start_us) // step_us))  # ceil division
    windows = []
    for k in range(1, n_windows + 1):
        t_end = t_start_us + k * step_us
        lo = int(np.searchsorted(stream.t, t_end - t_a_us, side="right"))
        hi = int(np.searchsorted(stream.t, t_end, side="right"))
        windows.append(EventWindow(t_end, t_a_us, stream[lo:hi]))
    return windows


def iter_windows(
    stream: EventStream,
    t_a_us: int = DEFAULT_T_A_US,
    step_us: int = DEFAULT_STEP_US,
    t_start_us: int = 0,
) -> Iterator[EventWindow]:
    """Generator form of window_events for long streams."""
    if t_a_us <= 0:
        raise InvalidParameter(f"t_a_us must be positive, got {t_a_us}")
    if step_us <= 0:
        raise InvalidParameter(f"step_us must be positive, got {step_us}")
    if len(stream) == 0:
        return
    t_max = int(stream.t[-1])
    n_windows = max(1, -(-(t_max - t_start_us) // step_us))
    for k in range(1, n_windows + 1):
        t_end = t_start_us + k * step_us
        lo = int(np.searchsorted(stream.t, t_end - t_a_us, side="right"))
        hi = int(np.searchsorted(stream.t, t_end, side="right"))
        yield EventWindow(t_end, t_a_us, stream[lo:hi])


def split_by_polarity(window: EventWindow) -> tuple[EventStream, EventStream, EventStream]:
    """Return (positives, negatives, all) for a window, each in stream order."""
    ev = window.events
    pos_mask = ev.p == POSITIVE
    return ev.select(pos_mask), ev.select(~pos_mask), ev


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, os.PathLike):
        with open(source, "r", encoding="utf-8") as f:
            return f.read()
    if isinstance(source, str):
        # Raw CSV text starts with the header; anything else is a path.
        if "\n" in source or source.startswith(CSV_HEADER):
            return source
        with open(source, "r", encoding="utf-8") as f:
            return f.read()
    # iterable of lines
    return "\n".join(str(ln).rstrip("\n") for ln in source)
