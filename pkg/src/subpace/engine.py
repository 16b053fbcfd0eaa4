"""Deterministic virtual-time event engine.

Time is an integer count of simulated nanoseconds.  Durations derived from
rates and sizes are rounded to whole nanoseconds, half up, so that repeated
runs are bit-for-bit identical on any platform.
"""

import heapq
import random

NS_PER_SEC = 1_000_000_000

# Convenience multipliers for writing times as integers: 6 * MS == 6 ms.
US = 1_000
MS = 1_000_000
SEC = NS_PER_SEC


def div_round_half_up(num: int, den: int) -> int:
    """Integer division of non-negative num by positive den, rounding half up."""
    if num < 0 or den <= 0:
        raise ValueError(f"div_round_half_up needs num >= 0, den > 0, got {num}/{den}")
    return (2 * num + den) // (2 * den)


def transmission_time_ns(bits: int, rate_bps: int) -> int:
    """Nanoseconds to move `bits` through a link of `rate_bps`, rounded half up."""
    return div_round_half_up(bits * NS_PER_SEC, rate_bps)


class ScheduledEvent:
    """Handle for a scheduled action; permits cancellation before firing."""

    __slots__ = ("fire_at", "seq", "action", "tag", "cancelled")

    def __init__(self, fire_at: int, seq: int, action, tag: str | None):
        self.fire_at = fire_at
        self.seq = seq
        self.action = action
        self.tag = tag
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Engine:
    """Ordered event queue plus a virtual clock.

    Events at equal times fire in insertion order.  Scheduling in the past is
    a programming error and raises immediately.  Randomness is handed out as
    named streams derived from the master seed, one per stochastic entity, so
    that adding entities does not perturb the draws seen by existing ones.
    """

    def __init__(self, seed: int = 0, trace: bool = False):
        self.now = 0
        self.seed = seed
        self._heap: list[tuple[int, int, ScheduledEvent]] = []
        self._seq = 0
        self._streams: dict[str, random.Random] = {}
        self.trace: list[tuple[int, int, str | None]] | None = [] if trace else None

    def schedule(self, at: int, action, tag: str | None = None) -> ScheduledEvent:
        if at < self.now:
            raise ValueError(f"cannot schedule event at t={at} before current t={self.now}")
        event = ScheduledEvent(at, self._seq, action, tag)
        self._seq += 1
        heapq.heappush(self._heap, (at, event.seq, event))
        return event

    def run_until(self, deadline: int) -> int:
        """Deliver every pending event with fire_at <= deadline, in order.

        The clock ends at the deadline even if the queue drains early.
        """
        if deadline < self.now:
            raise ValueError(f"deadline {deadline} is before current t={self.now}")
        while self._heap and self._heap[0][0] <= deadline:
            _, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            self.now = event.fire_at
            if self.trace is not None:
                self.trace.append((event.fire_at, event.seq, event.tag))
            event.action()
        self.now = deadline
        return self.now

    def stream(self, key: str) -> random.Random:
        """Reproducible uniform stream for one entity, keyed off the seed.

        String seeding uses a stable hash inside random.Random, so the same
        (seed, key) pair yields the same draws on every platform.
        """
        if key not in self._streams:
            self._streams[key] = random.Random(f"{self.seed}:{key}")
        return self._streams[key]
