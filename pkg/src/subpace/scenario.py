"""Wire a scenario into a runnable simulation and measure the outcome.

A simulation owns one engine, one bottleneck link, and n sender/receiver
pairs doing bulk transfers.  ACKs return over a signal-free path of half the
base RTT; the return path can be black-holed mid-run to study timer
behaviour under total loss of feedback.  Metrics are computed over
[warmup, duration] and are deterministic for a fixed (config, seed) pair.
"""

from dataclasses import dataclass

from .analysis import jain_fairness
from .config import ScenarioConfig, parse_field_value, with_value
from .endpoint import DEFAULT_TUNING, Ack, TcpReceiver, TcpSender, Tuning
from .engine import NS_PER_SEC, Engine, transmission_time_ns
from .netpath import AqmLink, Packet

BULK_BYTES = 1 << 40  # effectively unbounded for desk-scale runs


@dataclass
class ScenarioMetrics:
    mean_queue_delay_ns: int
    p95_queue_delay_ns: int
    per_flow_throughput_bps: list[float]
    jain_fairness: float
    total_drops: int
    total_marks: int
    total_rtos: int
    mean_pkts_per_rtt_per_flow: float

    @property
    def total_throughput_bps(self) -> float:
        return sum(self.per_flow_throughput_bps)


class Simulation:
    def __init__(self, cfg: ScenarioConfig, tuning: Tuning = DEFAULT_TUNING, trace: bool = False):
        self.cfg = cfg
        self.engine = Engine(seed=cfg.seed, trace=trace)
        self.ack_blackhole = False
        self._started = False

        self.link = AqmLink(
            self.engine,
            capacity_bps=cfg.capacity,
            buffer_limit=cfg.buffer_limit,
            policy=cfg.aqm_policy,
            target_delay_ns=cfg.aqm_target,
            ramp_ceiling_ns=cfg.aqm_ceiling,
            prop_rtt_ns=cfg.base_rtt,
            max_frame=cfg.frame_size,
            deliver=self._deliver_segment,
            rng=self.engine.stream("aqm/0"),
        )
        self.senders = [
            TcpSender(
                self.engine,
                flow_id=i,
                mss=cfg.smss,
                frame_overhead=cfg.frame_overhead,
                mode=cfg.sender_mode,
                cc_variant=cfg.cc_variant,
                ecn_capable=cfg.ecn,
                w_min=cfg.w_min_bytes,
                transmit=self.link.enqueue,
                tuning=tuning,
            )
            for i in range(cfg.n_flows)
        ]
        self.receivers = [
            TcpReceiver(
                self.engine,
                flow_id=i,
                frame_overhead=cfg.frame_overhead,
                send_ack=self._return_ack,
                delayed_acks=cfg.delayed_acks,
                tuning=tuning,
            )
            for i in range(cfg.n_flows)
        ]

    def _deliver_segment(self, packet: Packet) -> None:
        self.receivers[packet.flow_id].on_segment(packet)

    def _return_ack(self, ack: Ack) -> None:
        if self.ack_blackhole:
            return
        self.engine.schedule(
            self.engine.now + self.cfg.base_rtt // 2,
            lambda: self.senders[ack.flow_id].on_ack(ack),
            tag="ack.deliver",
        )

    def set_ack_blackhole(self, enabled: bool) -> None:
        self.ack_blackhole = enabled

    def start(self) -> None:
        if not self._started:
            self._started = True
            for sender in self.senders:
                sender.app_write(BULK_BYTES)

    def run(self, until: int | None = None) -> "Simulation":
        self.start()
        self.engine.run_until(self.cfg.duration if until is None else until)
        return self

    # -- measurement ----------------------------------------------------------

    def metrics(self) -> ScenarioMetrics:
        cfg = self.cfg
        start, end = cfg.warmup, cfg.duration
        window_s = (end - start) / NS_PER_SEC
        mean_qd, p95_qd = _queue_delay_stats(self.link.backlog_steps, cfg.capacity, start, end)

        flow_bytes = [0] * cfg.n_flows
        packets = 0
        for t, flow_id, size in self.link.departures:
            if start < t <= end:
                flow_bytes[flow_id] += size
                packets += 1
        per_flow_bps = [b * 8 / window_s for b in flow_bytes]

        mean_rtt_s = (cfg.base_rtt + mean_qd) / NS_PER_SEC
        pkts_per_rtt = packets / cfg.n_flows / window_s * mean_rtt_s

        rtos = sum(
            1 for sender in self.senders for t in sender.rto_times if start < t <= end
        )
        return ScenarioMetrics(
            mean_queue_delay_ns=mean_qd,
            p95_queue_delay_ns=p95_qd,
            per_flow_throughput_bps=per_flow_bps,
            jain_fairness=jain_fairness(per_flow_bps),
            total_drops=sum(1 for t in self.link.drop_times if start < t <= end),
            total_marks=sum(1 for t in self.link.mark_times if start < t <= end),
            total_rtos=rtos,
            mean_pkts_per_rtt_per_flow=pkts_per_rtt,
        )


def _queue_delay_stats(steps, capacity_bps, start, end) -> tuple[int, int]:
    """Time-weighted mean and 95th percentile of queue delay over [start, end]."""
    pieces: list[tuple[int, int]] = []  # (delay_ns, duration_ns)
    prev_t, prev_backlog = start, 0
    for t, backlog in steps:
        if t <= start:
            prev_backlog = backlog
            continue
        if t >= end:
            break
        if t > prev_t:
            pieces.append((transmission_time_ns(prev_backlog * 8, capacity_bps), t - prev_t))
        prev_t, prev_backlog = t, backlog
    if prev_t < end:
        pieces.append((transmission_time_ns(prev_backlog * 8, capacity_bps), end - prev_t))
    total = end - start
    if total <= 0 or not pieces:
        return 0, 0
    mean = round(sum(delay * dur for delay, dur in pieces) / total)
    pieces.sort()
    cutoff = 0.95 * total
    seen = 0
    p95 = pieces[-1][0]
    for delay, dur in pieces:
        seen += dur
        if seen >= cutoff:
            p95 = delay
            break
    return mean, p95


def run_scenario(cfg: ScenarioConfig, tuning: Tuning = DEFAULT_TUNING) -> ScenarioMetrics:
    return Simulation(cfg, tuning=tuning).run().metrics()


def derive_sweep_seed(base_seed: int, index: int) -> int:
    return base_seed * 1_000_003 + index


def sweep(cfg: ScenarioConfig, field_name: str, raw_values) -> list[tuple[str, ScenarioMetrics]]:
    """Run one scenario per value, rows in input order, independent seeds."""
    rows = []
    for index, raw in enumerate(raw_values):
        value = parse_field_value(field_name, raw)
        run_cfg = with_value(cfg, field_name, value)
        if field_name != "seed":
            run_cfg = with_value(run_cfg, "seed", derive_sweep_seed(cfg.seed, index))
        rows.append((raw, run_scenario(run_cfg)))
    return rows


# -- CSV rendering ------------------------------------------------------------

METRIC_COLUMNS = (
    "mean_queue_delay_ns",
    "p95_queue_delay_ns",
    "throughput_bps_total",
    "throughput_bps_min",
    "throughput_bps_max",
    "jain_fairness",
    "total_drops",
    "total_marks",
    "total_rtos",
    "mean_pkts_per_rtt_per_flow",
)


def _real(x: float) -> str:
    return f"{x:.6g}"


def _metric_cells(m: ScenarioMetrics) -> list[str]:
    per_flow = m.per_flow_throughput_bps or [0.0]
    return [
        str(m.mean_queue_delay_ns),
        str(m.p95_queue_delay_ns),
        _real(m.total_throughput_bps),
        _real(min(per_flow)),
        _real(max(per_flow)),
        _real(m.jain_fairness),
        str(m.total_drops),
        str(m.total_marks),
        str(m.total_rtos),
        _real(m.mean_pkts_per_rtt_per_flow),
    ]


def render_metrics_csv(m: ScenarioMetrics) -> str:
    return ",".join(METRIC_COLUMNS) + "\n" + ",".join(_metric_cells(m)) + "\n"


def render_sweep_csv(field_name: str, rows) -> str:
    out = [field_name + "," + ",".join(METRIC_COLUMNS)]
    for raw, metrics in rows:
        out.append(raw + "," + ",".join(_metric_cells(metrics)))
    return "\n".join(out) + "\n"


def render_regions_csv(rows) -> str:
    out = ["rtt_ns,rate_bps,window_mss,diagonal"]
    for rtt_ns, rate, window, diagonal in rows:
        out.append(f"{rtt_ns},{_real(rate)},{_real(window)},{diagonal}")
    return "\n".join(out) + "\n"
