"""Discrete-event transport: sequential unicast vs. broadcast delivery.

Frames occupy consecutive transmission slots of t_msg milliseconds on a
shared 1 ms-resolution clock.  A broadcast frame reaches every module in
its own slot (zero arrival spread — the mechanism behind the flat
delay-vs-N curve); a sequential frame reaches only the module named by
its message identifier.  Transmission latency is folded into the slot:
arrival equals send time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .frames import Frame, FrameError

SEQUENTIAL = "SEQUENTIAL"
BROADCAST = "BROADCAST"


@dataclass
class BusConfig:
    t_msg: int  # ms per transmission slot
    mode: str

    def __post_init__(self):
        if self.t_msg <= 0:
            raise ValueError("t_msg must be positive")
        if self.mode not in (SEQUENTIAL, BROADCAST):
            raise ValueError(f"unknown bus mode: {self.mode!r}")


@dataclass
class BusEvent:
    send_time: int
    arrival_time: int
    frame: Frame
    recipient: Optional[int]  # None means all modules

    def __post_init__(self):
        if self.arrival_time < self.send_time:
            raise ValueError("arrival before send")


@dataclass
class Timeline:
    events: list[BusEvent] = field(default_factory=list)
    horizon: int = 0

    def __post_init__(self):
        times = [e.arrival_time for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("events must be sorted by arrival time")


def schedule(frames: Sequence[Frame], config: BusConfig, start: int = 0) -> Timeline:
    """Frame i goes out in slot start + i * t_msg."""
    if not frames:
        raise ValueError("frames must be non-empty")
    events = []
    for i, frame in enumerate(frames):
        t = start + i * config.t_msg
        if config.mode == SEQUENTIAL:
            if frame.seq_id is None:
                raise FrameError("sequential frame lacks seq_id")
            recipient = frame.seq_id
        else:
            recipient = None
        events.append(BusEvent(t, t, frame, recipient))
    return Timeline(events, start + len(frames) * config.t_msg)


def merge(*timelines: Timeline) -> Timeline:
    """Interleave timelines preserving global arrival order (stable)."""
    events = sorted(
        (e for tl in timelines for e in tl.events), key=lambda e: e.arrival_time
    )
    horizon = max((tl.horizon for tl in timelines), default=0)
    return Timeline(events, horizon)


def replay(timeline: Timeline, sink: Callable[[int, Optional[int], Frame], None]) -> None:
    """Invoke sink(arrival_time, recipient, frame) in arrival order."""
    for event in timeline.events:
        sink(event.arrival_time, event.recipient, event.frame)
