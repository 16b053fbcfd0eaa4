"""Sub-segment window pacing: turn a window deficit into an inter-send wait.

When the window W is smaller than the next segment size s, the sender waits
d = (s/W - 1) * R after the event that last changed the window, then sends
the full segment and lets W go negative.  For constant W the emission
interval is then d + R = s*R/W, so halving W exactly doubles the interval.
The wait is computed with wide integer arithmetic, (s - W) * R / W, rounded
half up, which is overflow-safe and exact at W = s.
"""

from .engine import Engine, div_round_half_up


def segment_size(mss: int, snd_q: int) -> int:
    """Next segment's payload: never smaller than needed, never above one MSS."""
    if snd_q <= 0:
        raise ValueError("segment_size requires queued data (snd_q > 0)")
    return min(mss, snd_q)


def pacing_delay(seg: int, window: int, rtt: int) -> int:
    """Extra wait in ns before sending `seg` bytes under window `window`.

    Zero whenever window >= seg; undefined (raises) for window <= 0, where the
    caller must instead wait for the next window increase.
    """
    if seg <= 0:
        raise ValueError("segment size must be positive")
    if rtt < 0:
        raise ValueError("rtt must be non-negative")
    if window <= 0:
        raise ValueError("pacing delay undefined for window <= 0; await the next window increase")
    if window >= seg:
        return 0
    return div_round_half_up((seg - window) * rtt, window)


class Pacer:
    """Per-flow wait bookkeeping on top of an engine timer.

    At most one wait is pending.  A wait cycle is anchored at the time it was
    armed (the window-changing event); a mid-wait window change rebases the
    wait against that same epoch.  When the window is non-positive the pacer
    parks until the next increase.  The retained RTT estimate is the last
    smoothed sample and is deliberately left unchanged across idle periods.
    """

    def __init__(self, engine: Engine, initial_rtt: int, on_ready):
        self.engine = engine
        self.last_rtt = initial_rtt
        self.on_ready = on_ready
        self.epoch: int | None = None
        self.wait_until: int | None = None
        self.parked = False
        self._timer = None

    @property
    def waiting(self) -> bool:
        return self._timer is not None

    def update_rtt(self, rtt: int) -> None:
        if rtt <= 0:
            raise ValueError("rtt estimate must be positive")
        self.last_rtt = rtt

    def request(self, now: int, seg: int, window: int) -> bool:
        """Ask to send `seg` bytes now.  True means send immediately.

        Otherwise the pacer either armed a timed wait or parked awaiting a
        window increase; on_ready fires when the wait elapses.
        """
        if self.waiting:
            return False
        if window >= seg:
            self.parked = False
            return True
        if window <= 0:
            self.parked = True
            return False
        self.parked = False
        delay = pacing_delay(seg, window, self.last_rtt)
        if delay == 0:
            return True
        self.epoch = now
        self._arm(now + delay)
        return False

    def window_changed(self, now: int, seg: int, window: int) -> None:
        """Rebase a pending wait after the window moved; park if it went <= 0."""
        if not self.waiting:
            return
        if window <= 0:
            self.cancel()
            self.parked = True
            return
        target = self.epoch + pacing_delay(seg, window, self.last_rtt)
        if target == self.wait_until:
            return
        self._timer.cancel()
        if target <= now:
            # Entitlement already earned; fire through the queue so delivery
            # order stays deterministic.
            self._timer = self.engine.schedule(now, self._fire, tag="pacer.fire")
            self.wait_until = now
        else:
            self._timer = self.engine.schedule(target, self._fire, tag="pacer.fire")
            self.wait_until = target

    def cancel(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        self.wait_until = None
        self.epoch = None

    def _arm(self, wait_until: int) -> None:
        self.wait_until = wait_until
        self._timer = self.engine.schedule(wait_until, self._fire, tag="pacer.fire")

    def _fire(self) -> None:
        self._timer = None
        self.wait_until = None
        self.epoch = None
        self.on_ready(self.engine.now)
