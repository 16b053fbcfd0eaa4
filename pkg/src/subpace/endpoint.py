"""Per-flow TCP-like sender and receiver state machines.

The sender runs in one of two modes.  In baseline mode the congestion window
is a conventional unsigned byte count with a hard floor of two segments:
every multiplicative decrease rounds back up to 2*SMSS.  In submss mode the
window is a signed byte count run as pure clocking state: each new-data send
decrements it by the segment size (possibly below zero), each cumulative ACK
increments it by the bytes acked, and whenever it is smaller than the next
segment the pacer converts the deficit into a timed wait instead of rounding
up.  Retransmission timeouts then halve the window rather than doubling the
timer, so the growing wait takes over the role of exponential backoff.

The receiver implements standard delayed ACKs (every n segments or on a
timer), immediate duplicate ACKs for out-of-order arrivals, and ECE echo for
any ACK covering a CE-marked segment.
"""

from collections import deque
from dataclasses import dataclass

from .engine import MS, SEC, Engine
from .netpath import Packet
from .pacing import Pacer, segment_size

BASELINE = "baseline"
SUBMSS = "submss"
RENO_LIKE = "reno-like"
DCTCP_LIKE = "dctcp-like"

DCTCP_GAIN = 1.0 / 16.0


class ProtocolError(Exception):
    """An endpoint observed something the protocol forbids (e.g. ACK of unsent data)."""


@dataclass(frozen=True)
class Tuning:
    """Endpoint timer constants; defaults follow common practice."""

    rto_min: int = 200 * MS
    rto_max: int = 60 * SEC
    rto_initial: int = 1 * SEC
    initial_rtt: int = 100 * MS
    delack_timeout: int = 40 * MS
    ack_every: int = 2
    growth_enabled: bool = True


DEFAULT_TUNING = Tuning()


@dataclass
class Ack:
    flow_id: int
    ack_bytes: int
    ece: bool


@dataclass
class SegmentRecord:
    seq: int
    size: int
    sent_at: int
    retransmitted: bool = False


class TcpSender:
    def __init__(
        self,
        engine: Engine,
        flow_id: int,
        mss: int,
        frame_overhead: int,
        mode: str,
        cc_variant: str,
        ecn_capable: bool,
        w_min: int,
        transmit,
        tuning: Tuning = DEFAULT_TUNING,
    ):
        if mode not in (BASELINE, SUBMSS):
            raise ValueError(f"unknown sender mode {mode!r}")
        if cc_variant not in (RENO_LIKE, DCTCP_LIKE):
            raise ValueError(f"unknown cc variant {cc_variant!r}")
        self.engine = engine
        self.flow_id = flow_id
        self.mss = mss
        self.frame_overhead = frame_overhead
        self.mode = mode
        self.cc_variant = cc_variant
        self.ecn_capable = ecn_capable
        self.w_min = max(1, w_min)
        self.transmit = transmit
        self.tuning = tuning

        self.window = 2 * mss  # signed bytes in submss mode
        self.ssthresh = 1 << 62
        self.slow_start = True
        self.snd_una = 0
        self.snd_nxt = 0
        self.snd_q = 0
        self.unreclaimed = 0  # new-data bytes sent, neither acked nor written off by an RTO

        self.srtt: int | None = None
        self.rttvar = 0
        self.rto_backoff = 1

        self.dup_acks = 0
        self.recovery_until = 0
        self.ece_gate_until = 0
        self.pending_retx: SegmentRecord | None = None
        self.segments: deque[SegmentRecord] = deque()

        self._ca_acked = 0
        self.dctcp_alpha = 0.0
        self._dctcp_acked = 0
        self._dctcp_marked = 0
        self._dctcp_window_end = 0

        self.pacer = Pacer(engine, tuning.initial_rtt, self._on_pacer_ready)
        self._rto_timer = None

        self.rto_times: list[int] = []
        self.send_log: list[tuple[int, int, int, bool]] = []  # (time, seq, payload, is_retx)

    # -- window bookkeeping -------------------------------------------------

    @property
    def in_flight(self) -> int:
        return self.snd_nxt - self.snd_una

    @property
    def floor(self) -> int:
        return 2 * self.mss if self.mode == BASELINE else self.w_min

    def current_rto(self) -> int:
        if self.srtt is None:
            base = self.tuning.rto_initial
        else:
            base = self.srtt + max(1, 4 * self.rttvar)
        return min(self.tuning.rto_max, max(self.tuning.rto_min, base) * self.rto_backoff)

    def _next_segment(self) -> tuple[SegmentRecord | None, int]:
        """Pending retransmission first, then new data; returns (record, payload)."""
        if self.pending_retx is not None:
            if self.pending_retx.seq + self.pending_retx.size <= self.snd_una:
                self.pending_retx = None  # covered in the meantime
            else:
                return self.pending_retx, self.pending_retx.size
        if self.snd_q > 0:
            return None, segment_size(self.mss, self.snd_q)
        return None, 0

    # -- application interface ----------------------------------------------

    def app_write(self, nbytes: int) -> None:
        if nbytes <= 0:
            raise ValueError("app_write needs a positive byte count")
        self.snd_q += nbytes
        self._after_window_change(self.engine.now)

    # -- transmission -------------------------------------------------------

    def _pump(self, now: int) -> None:
        while True:
            retx, payload = self._next_segment()
            if payload == 0:
                self.pacer.cancel()
                return
            if self.mode == BASELINE:
                if retx is not None:
                    self._emit(now, retx)
                    continue
                if self.in_flight + payload > self.window:
                    return
                self._emit_new(now, payload)
                continue
            if self.pacer.waiting:
                return
            if self.pacer.request(now, payload, self.window):
                if retx is not None:
                    self._emit(now, retx)
                else:
                    self._emit_new(now, payload)
                continue
            return

    def _on_pacer_ready(self, now: int) -> None:
        # The elapsed wait is the entitlement to send exactly one segment.
        retx, payload = self._next_segment()
        if payload == 0:
            return
        if retx is not None:
            self._emit(now, retx)
        else:
            self._emit_new(now, payload)
        self._pump(now)

    def _emit_new(self, now: int, payload: int) -> None:
        record = SegmentRecord(self.snd_nxt, payload, now)
        self.segments.append(record)
        self.snd_nxt += payload
        self.snd_q -= payload
        if self.mode == SUBMSS:
            self.window -= payload
            self.unreclaimed += payload
            assert self.window > -self.mss, "window fell to -MSS or below"
        self.send_log.append((now, record.seq, payload, False))
        self.transmit(
            Packet(
                flow_id=self.flow_id,
                seq_bytes=record.seq,
                size=payload + self.frame_overhead,
                ecn_capable=self.ecn_capable,
                sent_at=now,
            )
        )
        if self._rto_timer is None:
            self._arm_rto(now)

    def _emit(self, now: int, record: SegmentRecord) -> None:
        """Retransmit an existing segment; never touches the clocking window."""
        record.retransmitted = True
        record.sent_at = now
        self.pending_retx = None
        self.send_log.append((now, record.seq, record.size, True))
        self.transmit(
            Packet(
                flow_id=self.flow_id,
                seq_bytes=record.seq,
                size=record.size + self.frame_overhead,
                ecn_capable=self.ecn_capable,
                is_retransmission=True,
                sent_at=now,
            )
        )
        self._arm_rto(now)

    # -- ACK processing -----------------------------------------------------

    def on_ack(self, ack: Ack) -> None:
        now = self.engine.now
        if ack.ack_bytes > self.snd_nxt:
            raise ProtocolError(
                f"flow {self.flow_id}: ACK for {ack.ack_bytes} beyond snd_nxt {self.snd_nxt}"
            )
        advance = ack.ack_bytes - self.snd_una
        if advance > 0:
            self._take_rtt_sample(now, ack.ack_bytes)
            self.snd_una = ack.ack_bytes
            if self.mode == SUBMSS:
                self.window += advance
                self.unreclaimed = max(0, self.unreclaimed - advance)
            self.rto_backoff = 1
            self.dup_acks = 0

        ece = ack.ece and self.ecn_capable
        if ece:
            self._exit_slow_start()
        if self.cc_variant == DCTCP_LIKE:
            self._dctcp_account(now, advance, ece)
        elif ece and now >= self.ece_gate_until:
            self._reduce()
            self.ece_gate_until = now + (self.srtt or self.tuning.initial_rtt)
        if advance > 0 and (self.cc_variant == DCTCP_LIKE or not ece):
            self._grow(now, advance)

        if advance > 0:
            if self.snd_una < self.recovery_until and self.segments:
                # Partial advance inside a loss episode: next hole goes out now.
                self.pending_retx = self.segments[0]
        elif self.in_flight > 0:
            self.dup_acks += 1
            if self.dup_acks == 3 and self.snd_una >= self.recovery_until:
                self._on_loss_detected(now)

        if self.in_flight == 0:
            self._cancel_rto()
        elif advance > 0:
            self._arm_rto(now)

        if self.srtt is not None:
            self.pacer.update_rtt(self.srtt)
        self._after_window_change(now)

    def _take_rtt_sample(self, now: int, acked_to: int) -> None:
        newest = None
        while self.segments and self.segments[0].seq + self.segments[0].size <= acked_to:
            newest = self.segments.popleft()
        if newest is None or newest.retransmitted:
            return  # Karn: no sample from a retransmitted segment
        sample = now - newest.sent_at
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample // 2
        else:
            self.rttvar = (3 * self.rttvar + abs(self.srtt - sample)) // 4
            self.srtt = (7 * self.srtt + sample) // 8

    def _grow(self, now: int, advance: int) -> None:
        if not self.tuning.growth_enabled:
            return
        if self.snd_una < self.recovery_until or now < self.ece_gate_until:
            return  # no growth while a congestion response is settling
        if self.slow_start:
            self.window += min(advance, self.mss)
            if self._conceptual_window() >= self.ssthresh:
                self.slow_start = False
            return
        # Byte-counted additive increase, so the growth rate per RTT does not
        # depend on how many segments each ACK covers.  One MSS per window per
        # RTT at large windows; below a few segments the step tapers with the
        # window so the 1/W form cannot overshoot a sub-segment window, while
        # the quarter-MSS lower bound keeps recovery from the floor additive
        # rather than proportional (a crushed flow must be able to climb back
        # against ambient marking).
        self._ca_acked += advance
        while True:
            conceptual = self._conceptual_window()
            if conceptual <= 0:
                break
            threshold = max(conceptual, self.mss)
            if self._ca_acked < threshold:
                break
            self._ca_acked -= threshold
            self.window += min(self.mss, max(conceptual // 4, self.mss // 4))

    def _conceptual_window(self) -> int:
        """Congestion control's view of the window.

        In submss mode the signed clocking balance plus the credit still out
        in flight; reductions must halve this sum, or a flow with a full pipe
        would shrug them off (its clocking balance hovers near zero while the
        flight credit holds the real window).
        """
        if self.mode == SUBMSS:
            return self.window + self.unreclaimed
        return self.window

    def _apply_conceptual(self, new_conceptual: int) -> None:
        self.window -= self._conceptual_window() - new_conceptual
        self.ssthresh = max(self.floor, new_conceptual)
        self._ca_acked = 0

    def _reduce(self) -> None:
        """Multiplicative decrease with the mode's floor."""
        conceptual = self._conceptual_window()
        if conceptual > 0:
            self._apply_conceptual(max(self.floor, conceptual // 2))
        if self.mode == BASELINE:
            assert self.window >= 2 * self.mss

    def _dctcp_account(self, now: int, advance: int, ece: bool) -> None:
        self._dctcp_acked += advance
        if ece:
            self._dctcp_marked += advance
        if self.snd_una >= self._dctcp_window_end and self._dctcp_acked > 0:
            fraction = self._dctcp_marked / self._dctcp_acked
            self.dctcp_alpha += DCTCP_GAIN * (fraction - self.dctcp_alpha)
            conceptual = self._conceptual_window()
            if self._dctcp_marked > 0 and conceptual > 0:
                cut = int(round(conceptual * self.dctcp_alpha / 2))
                self._apply_conceptual(max(self.floor, conceptual - cut))
            self._dctcp_acked = 0
            self._dctcp_marked = 0
            self._dctcp_window_end = self.snd_nxt

    def _exit_slow_start(self) -> None:
        self.slow_start = False

    # -- loss handling ------------------------------------------------------

    def _on_loss_detected(self, now: int) -> None:
        self._exit_slow_start()
        self._reduce()
        self.recovery_until = self.snd_nxt
        if self.segments:
            self.pending_retx = self.segments[0]

    def _arm_rto(self, now: int) -> None:
        self._cancel_rto()
        self._rto_timer = self.engine.schedule(now + self.current_rto(), self._on_rto, tag="rto")

    def _cancel_rto(self) -> None:
        if self._rto_timer is not None:
            self._rto_timer.cancel()
            self._rto_timer = None

    def _on_rto(self) -> None:
        now = self.engine.now
        self._rto_timer = None
        if self.in_flight == 0:
            return
        self.rto_times.append(now)
        self._exit_slow_start()
        if self.mode == BASELINE:
            # Classic response: collapse to the floor and back the timer off.
            self.ssthresh = max(2 * self.mss, self.window // 2)
            self.window = 2 * self.mss
            self._ca_acked = 0
            self.rto_backoff = min(self.rto_backoff * 2, 256)
            self.recovery_until = self.snd_nxt
            self.pending_retx = self.segments[0] if self.segments else None
            self._pump(now)
            return
        # Sub-MSS mode: reclaim the clocking credit written into flight, halve,
        # and let the pacer's growing wait replace the timer backoff.
        conceptual = self.window + self.unreclaimed
        assert conceptual > 0, "clocking conservation violated"
        self.window = max(self.w_min, conceptual // 2)
        self.unreclaimed = 0
        self._ca_acked = 0
        self.recovery_until = self.snd_nxt
        self.pending_retx = self.segments[0] if self.segments else None
        self._after_window_change(now)

    # -- pacing hooks ---------------------------------------------------------

    def _after_window_change(self, now: int) -> None:
        _, payload = self._next_segment()
        if payload == 0:
            self.pacer.cancel()
            return
        if self.mode == SUBMSS and self.pacer.waiting:
            self.pacer.window_changed(now, payload, self.window)
        else:
            self._pump(now)


class TcpReceiver:
    """In-order reassembly with delayed ACKs and ECE echo."""

    def __init__(
        self,
        engine: Engine,
        flow_id: int,
        frame_overhead: int,
        send_ack,
        delayed_acks: bool = True,
        tuning: Tuning = DEFAULT_TUNING,
    ):
        self.engine = engine
        self.flow_id = flow_id
        self.frame_overhead = frame_overhead
        self.send_ack = send_ack
        self.delayed_acks = delayed_acks
        self.ack_every = tuning.ack_every
        self.delack_timeout = tuning.delack_timeout

        self.rcv_nxt = 0
        self.pending_segments = 0
        self.ece_latch = False
        self._ooo: dict[int, int] = {}  # start -> end of buffered ranges
        self._delack_timer = None
        self.acks_sent = 0

    def on_segment(self, packet: Packet) -> None:
        now = self.engine.now
        payload = packet.size - self.frame_overhead
        if payload <= 0:
            raise ProtocolError(f"flow {self.flow_id}: frame smaller than header overhead")
        if packet.ce_marked:
            self.ece_latch = True

        if packet.seq_bytes == self.rcv_nxt:
            self.rcv_nxt += payload
            filled_hole = self._absorb_buffered()
            self.pending_segments += 1
            if not self.delayed_acks or filled_hole or self.pending_segments >= self.ack_every:
                self._emit_ack()
            elif self._delack_timer is None:
                self._delack_timer = self.engine.schedule(
                    now + self.delack_timeout, self._on_delack_timer, tag="delack"
                )
        elif packet.seq_bytes > self.rcv_nxt:
            end = packet.seq_bytes + payload
            if self._ooo.get(packet.seq_bytes, 0) < end:
                self._ooo[packet.seq_bytes] = end
            self._emit_ack()  # immediate duplicate ACK
        else:
            self._emit_ack()  # stale duplicate; re-state the cumulative point

    def _absorb_buffered(self) -> bool:
        filled = False
        while self.rcv_nxt in self._ooo:
            end = self._ooo.pop(self.rcv_nxt)
            self.rcv_nxt = max(self.rcv_nxt, end)
            filled = True
        return filled

    def _on_delack_timer(self) -> None:
        self._delack_timer = None
        if self.pending_segments > 0:
            self._emit_ack()

    def _emit_ack(self) -> None:
        if self._delack_timer is not None:
            self._delack_timer.cancel()
            self._delack_timer = None
        self.pending_segments = 0
        ece = self.ece_latch
        self.ece_latch = False
        self.acks_sent += 1
        self.send_ack(Ack(self.flow_id, self.rcv_nxt, ece))
