"""Fixation and eye-gesture classification of the 2D point-of-regard stream."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import ETG_CAMERA, PinholeCamera, backproject

VELOCITY_THRESHOLD_DEG_S = 36.0
DWELL_S = 2.0
WINK_MIN_S = 0.5
MEDIAN_WINDOW = 5


class TooFewSamples(Exception):
    pass


class InvalidTimestamps(Exception):
    pass


@dataclass(frozen=True)
class GazeSample:
    t: float
    u: float
    v: float
    left_open: bool = True
    right_open: bool = True
    valid: bool = True

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "u": self.u, "v": self.v,
                           "left_open": self.left_open, "right_open": self.right_open,
                           "valid": self.valid}, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "GazeSample":
        d = json.loads(text)
        return GazeSample(float(d["t"]), float(d["u"]), float(d["v"]),
                          bool(d.get("left_open", True)), bool(d.get("right_open", True)),
                          bool(d.get("valid", True)))


@dataclass(frozen=True)
class FixationEvent:
    start_t: float
    duration: float
    centroid: tuple          # (u, v)
    span: tuple              # (first_index, last_index) inclusive, in the input stream


@dataclass(frozen=True)
class WinkEvent:
    t: float                 # closure end time
    eye: str                 # "left" | "right"
    duration: float


def _check_monotone(ts):
    if np.any(np.diff(ts) <= 0):
        raise InvalidTimestamps("timestamps must be strictly increasing")


def _ray_dirs(samples, cam: PinholeCamera) -> np.ndarray:
    dirs = np.empty((len(samples), 3))
    for i, s in enumerate(samples):
        dirs[i] = backproject(cam, (s.u, s.v)).direction
    return dirs


def _median_filter(x: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    out = np.empty_like(x)
    for i in range(len(x)):
        lo = max(0, i - half)
        hi = min(len(x), i + half + 1)
        out[i] = np.median(x[lo:hi])
    return out


def angular_velocity(samples, cam: PinholeCamera = ETG_CAMERA,
                     median_window: int = MEDIAN_WINDOW) -> np.ndarray:
    """Per-sample eye speed in deg/s for a run of valid samples.

    Speed at sample i is the angle between the backprojected rays of samples
    i-1 and i over their time difference (the first sample copies the
    second), then median filtered to suppress single-sample noise.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise TooFewSamples(f"need >= 3 samples, got {len(samples)}")
    ts = np.array([s.t for s in samples])
    _check_monotone(ts)
    dirs = _ray_dirs(samples, cam)
    dots = np.clip(np.einsum("ij,ij->i", dirs[:-1], dirs[1:]), -1.0, 1.0)
    ang = np.degrees(np.arccos(dots))
    raw = np.empty(len(samples))
    raw[1:] = ang / np.diff(ts)
    raw[0] = raw[1]
    return _median_filter(raw, median_window)


def raw_angular_velocity(samples, cam: PinholeCamera = ETG_CAMERA) -> np.ndarray:
    """Unfiltered per-sample speed (same difference scheme as angular_velocity)."""
    return angular_velocity(samples, cam, median_window=1)


def classify_fixations(samples, cam: PinholeCamera = ETG_CAMERA,
                       vel_threshold: float = VELOCITY_THRESHOLD_DEG_S,
                       dwell: float = DWELL_S) -> list[FixationEvent]:
    """Maximal slow-gaze runs lasting at least the dwell time.

    Invalid samples break runs (tracking loss is never bridged: fixations
    trigger robot motion).
    """
    samples = list(samples)
    events: list[FixationEvent] = []
    # split into contiguous valid segments
    seg_start = None
    for i in range(len(samples) + 1):
        valid = i < len(samples) and samples[i].valid
        if valid and seg_start is None:
            seg_start = i
        elif not valid and seg_start is not None:
            events.extend(_classify_segment(samples, seg_start, i, cam, vel_threshold, dwell))
            seg_start = None
    return events


def _classify_segment(samples, lo, hi, cam, vel_threshold, dwell):
    seg = samples[lo:hi]
    if len(seg) < 3:
        return []
    speed = angular_velocity(seg, cam)
    slow = speed < vel_threshold
    events = []
    run_start = None
    for i in range(len(seg) + 1):
        inside = i < len(seg) and slow[i]
        if inside and run_start is None:
            run_start = i
        elif not inside and run_start is not None:
            first, last = run_start, i - 1
            duration = seg[last].t - seg[first].t
            if duration >= dwell:
                us = np.array([[s.u, s.v] for s in seg[first:last + 1]])
                c = us.mean(axis=0)
                events.append(FixationEvent(seg[first].t, float(duration),
                                            (float(c[0]), float(c[1])),
                                            (lo + first, lo + last)))
            run_start = None
    return events


def detect_winks(samples, min_duration: float = WINK_MIN_S) -> list[WinkEvent]:
    """Single-eye closures of at least min_duration with the other eye open.

    Both-eyes-closed intervals are blinks and emit nothing; a closure that
    overlaps a blink is discarded.
    """
    samples = list(samples)
    events: list[WinkEvent] = []
    for eye, closed_attr, other_attr in (("left", "left_open", "right_open"),
                                         ("right", "right_open", "left_open")):
        start = None
        other_ok = True
        for i in range(len(samples) + 1):
            s = samples[i] if i < len(samples) else None
            closed = s is not None and s.valid and not getattr(s, closed_attr)
            if closed and start is None:
                start = i
                other_ok = getattr(s, other_attr)
            elif closed:
                other_ok = other_ok and getattr(s, other_attr)
            elif start is not None:
                end = i - 1
                duration = samples[end].t - samples[start].t
                if other_ok and duration >= min_duration:
                    events.append(WinkEvent(samples[end].t, eye, float(duration)))
                start = None
    events.sort(key=lambda e: (e.t, e.eye))
    return events


class FixationStream:
    """Chunk-friendly wrapper: feed samples in pieces, classify at the end.

    Classification needs the whole run (dwell spans many chunks), so results
    are produced on finish(); feeding the same stream in any chunking yields
    identical events.
    """

    def __init__(self, cam: PinholeCamera = ETG_CAMERA,
                 vel_threshold: float = VELOCITY_THRESHOLD_DEG_S, dwell: float = DWELL_S):
        self.cam = cam
        self.vel_threshold = vel_threshold
        self.dwell = dwell
        self._samples: list[GazeSample] = []

    def extend(self, samples):
        self._samples.extend(samples)

    def finish(self) -> list[FixationEvent]:
        return classify_fixations(self._samples, self.cam, self.vel_threshold, self.dwell)


def read_trace(path) -> list[GazeSample]:
    """Read a JSONL gaze trace; raises ParseError with the 1-based line number."""
    samples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(GazeSample.from_json(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ParseError(lineno, str(e)) from e
    return samples


def write_trace(path, samples):
    with open(path, "w") as fh:
        for s in samples:
            fh.write(s.to_json() + "\n")


class ParseError(Exception):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line
