"""Per-node event collection and the four reputation estimators.

Each event is a Bernoulli outcome (1 success, 0 failure) of one action by
one node. The estimators of the node's success probability are:

``ml``
    successes / events over the whole history (unbounded reference).
``mlt``
    mean outcome of the events whose tick lies in ``(now - s, now]``.
``mle``
    mean outcome of the last ``n_e`` events, or of all events while fewer
    than ``n_e`` have been seen.
``mlm``
    running mean updated in O(1); equal to ``ml`` up to rounding.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import errors

METHODS = ("ml", "mlt", "mle", "mlm")
DEFAULT_TIME_WINDOW = 150
DEFAULT_EVENT_WINDOW = 150


@dataclass(frozen=True)
class EventRecord:
    node: bytes
    t: int
    outcome: int

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome!r}")


@dataclass(slots=True)
class MlmState:
    count: int = 0
    mean: float = 0.0

    def update(self, outcome: int) -> None:
        self.count += 1
        # Same value as (mean * (count - 1) + outcome) / count, less rounding drift.
        self.mean += (outcome - self.mean) / self.count


class EventWindowState:
    """Ring buffer holding the last ``capacity`` outcomes."""

    __slots__ = ("capacity", "buffer", "successes")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("event window must hold at least one event")
        self.capacity = capacity
        self.buffer: deque[int] = deque(maxlen=capacity)
        self.successes = 0

    def push(self, outcome: int) -> None:
        if len(self.buffer) == self.capacity:
            self.successes -= self.buffer[0]
        self.buffer.append(outcome)
        self.successes += outcome

    def __len__(self) -> int:
        return len(self.buffer)


class TimeWindowState:
    """``(tick, outcome)`` pairs no older than ``size`` ticks before the newest."""

    __slots__ = ("size", "buffer", "successes")

    def __init__(self, size: int):
        if size < 1:
            raise ValueError("time window must span at least one tick")
        self.size = size
        self.buffer: deque[tuple[int, int]] = deque()
        self.successes = 0

    def push(self, t: int, outcome: int) -> None:
        self.buffer.append((t, outcome))
        self.successes += outcome
        self._evict(t - self.size)

    def _evict(self, horizon: int) -> None:
        buf = self.buffer
        while buf and buf[0][0] <= horizon:
            self.successes -= buf.popleft()[1]

    def counts(self, now: int) -> tuple[int, int]:
        """(successes, events) with tick in ``(now - size, now]``; does not mutate."""
        horizon = now - self.size
        successes, events = self.successes, len(self.buffer)
        for t, outcome in self.buffer:
            if t > horizon:
                break
            successes -= outcome
            events -= 1
        for t, outcome in reversed(self.buffer):
            if t <= now or events == 0:
                break
            successes -= outcome
            events -= 1
        return successes, events

    def __len__(self) -> int:
        return len(self.buffer)


class ReputationContract:
    """Event collector for one node, emitted when the node registers."""

    def __init__(self, node: bytes, s: int = DEFAULT_TIME_WINDOW,
                 n_e: int = DEFAULT_EVENT_WINDOW):
        self.node = node
        self.successes = 0
        self.total = 0
        self.last_tick: Optional[int] = None
        self.mlm = MlmState()
        self.event_window = EventWindowState(n_e)
        self.time_window = TimeWindowState(s)

    @property
    def s(self) -> int:
        return self.time_window.size

    @property
    def n_e(self) -> int:
        return self.event_window.capacity

    def record_event(self, event: EventRecord) -> None:
        if event.node != self.node:
            raise errors.NodeMismatch(f"event for {event.node.hex()} sent to {self.node.hex()}")
        if self.last_tick is not None and event.t <= self.last_tick:
            raise errors.NonMonotoneTick(f"tick {event.t} not after {self.last_tick}")
        self.last_tick = event.t
        self.successes += event.outcome
        self.total += 1
        self.mlm.update(event.outcome)
        self.event_window.push(event.outcome)
        self.time_window.push(event.t, event.outcome)

    def estimate_ml(self) -> float:
        if self.total == 0:
            raise errors.NoData("no events recorded")
        return self.successes / self.total

    def estimate_mlt(self, now: int) -> float:
        successes, events = self.time_window.counts(now)
        if events == 0:
            raise errors.EmptyWindow(f"no events in ({now - self.s}, {now}]")
        return successes / events

    def estimate_mle(self) -> float:
        if not self.event_window.buffer:
            raise errors.NoData("no events recorded")
        return self.event_window.successes / len(self.event_window)

    def estimate_mlm(self) -> float:
        if self.mlm.count == 0:
            raise errors.NoData("no events recorded")
        return self.mlm.mean

    def estimate(self, method: str, now: Optional[int] = None) -> float:
        if method == "ml":
            return self.estimate_ml()
        if method == "mle":
            return self.estimate_mle()
        if method == "mlm":
            return self.estimate_mlm()
        if method == "mlt":
            if now is None:
                if self.last_tick is None:
                    raise errors.EmptyWindow("no events recorded")
                now = self.last_tick
            return self.estimate_mlt(now)
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")

    def sample_count(self, method: str, now: Optional[int] = None) -> int:
        """Number of events the estimate of ``method`` is computed from."""
        if method in ("ml", "mlm"):
            return self.total
        if method == "mle":
            return len(self.event_window)
        if method == "mlt":
            if now is None:
                now = self.last_tick if self.last_tick is not None else 0
            return self.time_window.counts(now)[1]
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
