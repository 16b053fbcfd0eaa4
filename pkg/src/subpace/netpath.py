"""Bottleneck path model: fixed-rate link, FIFO byte queue, delay-ramp AQM.

The queue is measured in bytes; queuing delay is recomputed exactly from the
backlog as backlog*8/capacity.  The AQM makes its drop/mark decision at
enqueue time with probability rising linearly from the target delay to the
ramp ceiling.  Propagation delay is split symmetrically between the forward
and return paths; the return path is modelled elsewhere as signal-free.
"""

from collections import deque
from dataclasses import dataclass

from .engine import Engine, transmission_time_ns

POLICIES = ("drop-tail", "red-drop", "ramp-mark")

QUEUED = "queued"
MARKED = "queued+marked"
DROPPED = "dropped"


@dataclass
class Packet:
    """One simulated segment; size is the header-inclusive frame size."""

    flow_id: int
    seq_bytes: int
    size: int
    ecn_capable: bool = False
    ce_marked: bool = False
    is_retransmission: bool = False
    sent_at: int = 0

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"packet size must be positive, got {self.size}")
        if self.ce_marked and not self.ecn_capable:
            raise ValueError("ce_marked requires ecn_capable")


class AqmLink:
    """FIFO byte queue drained at a fixed bit rate, governed by an AQM policy.

    `deliver(packet)` is called one forward propagation delay after each
    departure.  Backlog counts every queued byte including the packet in
    service; it is decremented when the packet finishes serializing.
    """

    def __init__(
        self,
        engine: Engine,
        capacity_bps: int,
        buffer_limit: int,
        policy: str,
        target_delay_ns: int,
        ramp_ceiling_ns: int,
        prop_rtt_ns: int,
        max_frame: int,
        deliver,
        rng=None,
    ):
        if policy not in POLICIES:
            raise ValueError(f"unknown AQM policy {policy!r}")
        if capacity_bps <= 0:
            raise ValueError("capacity must be positive")
        target_bytes = target_delay_ns * capacity_bps // (8 * 10**9)
        if buffer_limit <= target_bytes:
            raise ValueError(
                "buffer_limit must strictly exceed the byte equivalent of target_delay "
                f"({buffer_limit} <= {target_bytes})"
            )
        if policy != "drop-tail" and ramp_ceiling_ns <= target_delay_ns:
            raise ValueError("ramp_ceiling must exceed target_delay")
        self.engine = engine
        self.capacity_bps = capacity_bps
        self.buffer_limit = buffer_limit
        self.policy = policy
        self.target_delay_ns = target_delay_ns
        self.ramp_ceiling_ns = ramp_ceiling_ns
        self.prop_one_way_ns = prop_rtt_ns // 2
        self.max_frame = max_frame
        self.deliver = deliver
        self.rng = rng if rng is not None else engine.stream("aqm/0")

        self.backlog = 0
        self._fifo: deque[Packet] = deque()
        self._serving = False

        # Observation log, consumed by the metrics layer.
        self.backlog_steps: list[tuple[int, int]] = [(0, 0)]
        self.departures: list[tuple[int, int, int]] = []  # (time, flow_id, size)
        self.drop_times: list[int] = []
        self.mark_times: list[int] = []
        self.enqueued_bytes = 0
        self.departed_bytes = 0
        self.dropped_bytes = 0

    def queue_delay(self) -> int:
        """Current queuing delay in ns, recomputed exactly from the backlog."""
        return transmission_time_ns(self.backlog * 8, self.capacity_bps)

    def signal_probability(self) -> float:
        """Linear ramp from 0 at the target delay to 1 at the ceiling."""
        delay = self.queue_delay()
        if delay <= self.target_delay_ns:
            return 0.0
        if delay >= self.ramp_ceiling_ns:
            return 1.0
        return (delay - self.target_delay_ns) / (self.ramp_ceiling_ns - self.target_delay_ns)

    def enqueue(self, packet: Packet) -> str:
        """Admit, mark, or drop a packet; returns the disposition."""
        if packet.size > self.max_frame:
            raise ValueError(f"packet size {packet.size} exceeds frame size {self.max_frame}")
        now = self.engine.now
        if self.backlog + packet.size > self.buffer_limit:
            return self._drop(now, packet)
        if self.policy != "drop-tail":
            prob = self.signal_probability()
            if self.rng.random() < prob:
                if self.policy == "red-drop":
                    return self._drop(now, packet)
                # ramp-mark: signal via CE when possible, fall back to drop.
                if packet.ecn_capable:
                    packet.ce_marked = True
                    self.mark_times.append(now)
                    self._admit(now, packet)
                    return MARKED
                return self._drop(now, packet)
        self._admit(now, packet)
        return QUEUED

    def _admit(self, now: int, packet: Packet) -> None:
        self.backlog += packet.size
        self.enqueued_bytes += packet.size
        self.backlog_steps.append((now, self.backlog))
        self._fifo.append(packet)
        if not self._serving:
            self._start_service(now)

    def _drop(self, now: int, packet: Packet) -> str:
        self.drop_times.append(now)
        self.dropped_bytes += packet.size
        return DROPPED

    def _start_service(self, now: int) -> None:
        head = self._fifo[0]
        self._serving = True
        self.engine.schedule(
            now + transmission_time_ns(head.size * 8, self.capacity_bps),
            self._depart,
            tag="link.depart",
        )

    def _depart(self) -> None:
        now = self.engine.now
        packet = self._fifo.popleft()
        self.backlog -= packet.size
        self.departed_bytes += packet.size
        self.backlog_steps.append((now, self.backlog))
        self.departures.append((now, packet.flow_id, packet.size))
        self.engine.schedule(
            now + self.prop_one_way_ns,
            lambda p=packet: self.deliver(p),
            tag="link.deliver",
        )
        if self._fifo:
            self._start_service(now)
        else:
            self._serving = False
