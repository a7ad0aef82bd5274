"""Simulation event log: the JSONL protocol shared with the teleop console."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

KINDS = ("gaze", "fixation", "pose", "selection", "plan", "step", "feedback",
         "mode", "result", "init")


@dataclass(frozen=True)
class SimEvent:
    t: float
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"t": round(self.t, 6), "kind": self.kind, "payload": self.payload},
                          sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only, time-ordered event record."""

    def __init__(self):
        self.events: list[SimEvent] = []

    def emit(self, t: float, kind: str, **payload):
        if kind not in KINDS:
            raise ValueError(f"unknown event kind '{kind}'")
        if self.events and t < self.events[-1].t - 1e-9:
            raise ValueError("event time went backwards")
        self.events.append(SimEvent(float(t), kind, _jsonable(payload)))

    def of_kind(self, kind: str) -> list[SimEvent]:
        return [e for e in self.events if e.kind == kind]

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @staticmethod
    def read(path) -> "EventLog":
        log = EventLog()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    d = json.loads(line)
                    log.events.append(SimEvent(d["t"], d["kind"], d["payload"]))
        return log


def _jsonable(obj):
    """Round floats for stable serialization; recurse into containers."""
    import numpy as np
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return round(float(obj), 9)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
