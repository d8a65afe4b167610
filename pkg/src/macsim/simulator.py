"""Lockstep execution engine: per round collect transmissions, resolve
feedback, apply injections under the budget, run state transitions, log the
trace, and (optionally) evaluate the global invariants."""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .adversary import BudgetState, Strategy, make_strategy
from .algorithms import (
    Algorithm,
    QuadrupleController,
    RoundContext,
    double_phase_lengths,
    double_phase_packets,
    make_algorithm,
)
from .algorithms.quadruple_round import PhaseSpan
from .channel import observe, resolve_round
from .core import (
    ConfigError,
    Feedback,
    FeedbackKind,
    Message,
    PacketId,
    RunConfig,
    SILENCE,
    SimulationError,
    StationId,
)


@dataclass(slots=True)
class Station:
    sid: StationId
    state: Any
    queue: deque


@dataclass
class Trace:
    """Per-round event log; round r lives at index r - 1."""

    transmitters: list[tuple[StationId, ...]] = field(default_factory=list)
    feedback: list[str] = field(default_factory=list)  # "S" | "C" | "H"
    heard_packet: list[Optional[PacketId]] = field(default_factory=list)
    injections: list[tuple[tuple[StationId, int, bool], ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.feedback)

    def void_rounds(self) -> int:
        return sum(1 for kind in self.feedback if kind != "H")


@dataclass
class Metrics:
    per_packet: list[tuple[PacketId, int, Optional[int]]] = field(default_factory=list)
    max_latency: int = 0
    unheard_count: int = 0
    max_queued: int = 0
    queued_series: list[int] = field(default_factory=list)
    silent_rounds: int = 0
    collision_rounds: int = 0
    heard_rounds: int = 0
    max_global_queue: Optional[int] = None
    double_phase_lengths: list[int] = field(default_factory=list)
    double_phase_packets: list[int] = field(default_factory=list)
    phase_spans: list[PhaseSpan] = field(default_factory=list)

    @property
    def void_rounds(self) -> int:
        return self.silent_rounds + self.collision_rounds

    def latencies(self) -> list[int]:
        return [heard - injected for _, injected, heard in self.per_packet if heard is not None]

    def to_json(self) -> str:
        doc: dict[str, Any] = {
            "max_latency": self.max_latency,
            "max_queued": self.max_queued,
            "unheard_count": self.unheard_count,
            "silent_rounds": self.silent_rounds,
            "collision_rounds": self.collision_rounds,
            "heard_rounds": self.heard_rounds,
            "per_packet": [
                {
                    "packet": f"{pid.injection_round}:{pid.sequence_within_round}",
                    "injection_round": injected,
                    "heard_round": heard,
                    "latency": None if heard is None else heard - injected,
                }
                for pid, injected, heard in self.per_packet
            ],
        }
        if self.max_global_queue is not None:
            doc["max_global_queue"] = self.max_global_queue
        if self.double_phase_lengths:
            doc["double_phase_lengths"] = self.double_phase_lengths
        return json.dumps(doc, indent=2)


class InvariantViolation(SimulationError):
    """An enabled invariant check failed; carries the offending round, a state
    snapshot, and the trace prefix for reproduction."""

    def __init__(self, round_no: int, reason: str, snapshot: dict, trace: Trace) -> None:
        super().__init__(f"round {round_no}: {reason}")
        self.round_no = round_no
        self.reason = reason
        self.snapshot = snapshot
        self.trace = trace


class World:
    """Mutable run state; `stations` holds only active stations, in activation
    order, and retired stations never reappear."""

    __slots__ = (
        "config",
        "round_no",
        "stations",
        "budget",
        "controller",
        "trace",
        "feedback",
        "retired",
        "injected_total",
        "heard_total",
        "packets",
        "heard_at",
        "metrics_live",
    )

    def __init__(self, config: RunConfig, controller: Optional[QuadrupleController]) -> None:
        self.config = config
        self.round_no = 1
        self.stations: dict[StationId, Station] = {}
        self.budget = BudgetState(config.adversary_type)
        self.controller = controller
        self.trace = Trace()
        self.feedback: Feedback = SILENCE
        self.retired: set[StationId] = set()
        self.injected_total = 0
        self.heard_total = 0
        self.packets: list[tuple[PacketId, int]] = []
        self.heard_at: dict[PacketId, int] = {}
        self.metrics_live = Metrics()


def _snapshot(world: World) -> dict:
    return {
        sid.label(): {"state": repr(st.state), "queue_len": len(st.queue)}
        for sid, st in world.stations.items()
    }


def check_stack_invariant(
    world: World, started_active: list[Station], k_start: int
) -> Optional[str]:
    """Lemma-1 stack invariant, evaluated at round end against the stations
    that were active at round start and survived: counters are pairwise
    distinct, lie in [1, k], decrease along activation order, and the only
    value of [1, k] they may leave unassigned is 1 (so they are exactly
    [1..s] or [2..s+1] for s survivors)."""
    if k_start == 0:
        return None
    survivors = [st for st in started_active if st.sid in world.stations]
    values = sorted(st.state.backoff_counter for st in survivors)
    if not values:
        return None
    if values[0] < 1 or values[-1] > k_start:
        return f"stack values {values} outside [1, {k_start}]"
    s = len(values)
    if values != list(range(1, s + 1)) and values != list(range(2, s + 2)):
        return f"stack values {values} leave a hole other than 1"
    ordered = sorted(survivors, key=lambda st: st.sid)
    order_counters = [st.state.backoff_counter for st in ordered]
    if order_counters != sorted(order_counters, reverse=True):
        return f"stack order {order_counters} not inverse to activation order"
    return None


def check_queue_invariants(world: World) -> Optional[str]:
    """Lemma-4 queue-size and queue-position invariants at round end."""
    round_no = world.round_no
    manifested = sum(1 for sid in world.stations if sid.activation_round < round_no)
    positions = []
    for sid, st in world.stations.items():
        state = st.state
        if state.queue_size > 0 and state.queue_size != manifested:
            return (
                f"station {sid.label()} has queue_size {state.queue_size}, "
                f"expected {manifested} active stations"
            )
        if state.queue_position >= 1:
            positions.append((sid, state.queue_position))
    values = [pos for _, pos in positions]
    if len(set(values)) != len(values):
        return f"duplicate queue positions {sorted(values)}"
    by_activation = [pos for _, pos in sorted(positions, key=lambda item: item[0])]
    if by_activation != sorted(by_activation):
        return f"queue positions {by_activation} not in activation order"
    return None


def _check_double_phase(controller: QuadrupleController, checked: int) -> Optional[str]:
    spans = controller.spans
    if len(spans) < 2 or len(spans) // 2 <= checked:
        return None
    lengths = double_phase_lengths(spans)
    packets = double_phase_packets(spans)
    d = len(lengths) - 1
    length, k = lengths[d], packets[d]
    if k == 1:
        if length != 3:
            return f"double phase {d} served 1 packet in {length} rounds, expected 3"
    elif length > 2 * k + 2:
        return f"double phase {d} served {k} packets in {length} rounds > {2 * k + 2}"
    return None


def step(world: World, algorithm: Algorithm, strategy: Strategy) -> None:
    """Execute one round in the fixed order: transmit, feedback, injection,
    transition."""
    config = world.config
    round_no = world.round_no
    if round_no > 1:
        world.budget.advance()
    controller = world.controller
    if controller is not None:
        controller.begin_round(round_no)

    checks = config.invariant_checks
    active = list(world.stations.values())
    ctx = RoundContext(round_no, controller)

    # (i) transmissions
    messages: list[Message] = []
    tx_stations: list[Station] = []
    for st in active:
        if st.queue and algorithm.wants_transmit(st.sid, st.state, ctx):
            control, over = algorithm.message_content(st.state, len(st.queue))
            messages.append(Message(st.queue[0], st.sid, control, over))
            tx_stations.append(st)

    if checks and algorithm.name == "queue-backoff":
        had_front = any(st.state.queue_position == 1 for st in active)
        member_tx = sum(1 for st in tx_stations if st.state.queue_position >= 1)
    else:
        had_front = False
        member_tx = 0

    # (ii) feedback
    feedback = resolve_round(messages)
    observed = observe(feedback, config.channel_mode)
    world.feedback = feedback

    # (iii) injections
    decisions = strategy.inject(world)
    pending: dict[StationId, list[PacketId]] = {}
    fresh: list[tuple[Station, list[PacketId]]] = []
    log: list[tuple[StationId, int, bool]] = []
    seq = 0
    total = 0
    ordinal = 0
    for decision in decisions:
        if decision.packets < 1:
            raise SimulationError("injection of zero packets")
        pids = [PacketId(round_no, seq + i) for i in range(decision.packets)]
        seq += decision.packets
        total += decision.packets
        if decision.target is None:
            sid = StationId(round_no, ordinal)
            ordinal += 1
            fresh.append((Station(sid, algorithm.initial_state(sid), deque()), pids))
            log.append((sid, decision.packets, True))
        else:
            if decision.target in world.retired:
                raise SimulationError(
                    f"injection into retired station {decision.target.label()}"
                )
            target = world.stations.get(decision.target)
            if target is None:
                raise SimulationError(
                    f"injection into unknown station {decision.target.label()}"
                )
            pending.setdefault(target.sid, []).extend(pids)
            log.append((target.sid, decision.packets, False))
    if ordinal > config.adversary_type.k_activating:
        raise SimulationError(
            f"{ordinal} fresh activations in round {round_no} exceed the "
            f"{config.adversary_type.k_activating}-activating constraint"
        )
    world.budget.spend(total)
    world.injected_total += total
    for pid in [p for _, plist in fresh for p in plist] + [
        p for plist in pending.values() for p in plist
    ]:
        world.packets.append((pid, round_no))

    # (iv) state transitions
    heard_message = feedback.message if feedback.kind is FeedbackKind.HEARD else None
    heard_pid: Optional[PacketId] = None
    for st in active:
        own_heard = heard_message is not None and heard_message.sender == st.sid
        if own_heard:
            heard_pid = st.queue.popleft()
            if heard_pid != heard_message.packet:
                raise SimulationError("heard packet does not match the transmitted one")
            world.heard_total += 1
            world.heard_at[heard_pid] = round_no
        extra = pending.pop(st.sid, None)
        if extra:
            st.queue.extend(extra)
        still_active = bool(st.queue)
        algorithm.transition(st.sid, st.state, observed, own_heard, still_active)
        if not still_active:
            del world.stations[st.sid]
            world.retired.add(st.sid)
    if pending:
        raise SimulationError("injection targeted a station that was not active")
    for st, pids in fresh:
        st.queue.extend(pids)
        world.stations[st.sid] = st
    if controller is not None:
        controller.step(round_no, feedback)

    # trace + live metrics
    trace = world.trace
    trace.transmitters.append(tuple(m.sender for m in messages))
    trace.feedback.append(feedback.kind.value)
    trace.heard_packet.append(heard_pid)
    trace.injections.append(tuple(log))

    live = world.metrics_live
    kind = feedback.kind
    if kind is FeedbackKind.HEARD:
        live.heard_rounds += 1
    elif kind is FeedbackKind.COLLISION:
        live.collision_rounds += 1
    else:
        live.silent_rounds += 1
    queued = world.injected_total - world.heard_total
    live.queued_series.append(queued)
    if queued > live.max_queued:
        live.max_queued = queued
    if algorithm.name == "queue-backoff":
        in_queue = sum(
            len(st.queue) for st in world.stations.values() if st.state.queue_position >= 1
        )
        if live.max_global_queue is None or in_queue > live.max_global_queue:
            live.max_global_queue = in_queue

    if checks:
        reason = None
        if algorithm.name == "counting-backoff":
            reason = check_stack_invariant(world, active, len(active))
        elif algorithm.name == "queue-backoff":
            reason = check_queue_invariants(world)
            if reason is None and had_front and member_tx != 1:
                reason = (
                    f"{member_tx} enqueued stations transmitted while the queue had a front"
                )
        elif controller is not None:
            reason = _check_double_phase(controller, (len(controller.spans) - 1) // 2)
        if reason is not None:
            raise InvariantViolation(round_no, reason, _snapshot(world), trace)

    world.round_no += 1


def run(config: RunConfig) -> tuple[Trace, Metrics]:
    """Execute a full horizon-bounded run and compute its metrics."""
    algorithm = make_algorithm(config.algorithm, config.variant)
    if algorithm.requires_collision_detection and not config.channel_mode.collision_detection:
        raise ConfigError(f"{algorithm.name} requires a channel with collision detection")
    strategy = make_strategy(config)
    controller = QuadrupleController() if algorithm.name == "quadruple-round" else None
    world = World(config, controller)
    for _ in range(config.horizon):
        step(world, algorithm, strategy)
    metrics = world.metrics_live
    metrics.per_packet = [
        (pid, injected, world.heard_at.get(pid)) for pid, injected in world.packets
    ]
    metrics.unheard_count = sum(1 for _, _, heard in metrics.per_packet if heard is None)
    latencies = metrics.latencies()
    metrics.max_latency = max(latencies, default=0)
    if controller is not None:
        metrics.phase_spans = list(controller.spans)
        metrics.double_phase_lengths = double_phase_lengths(controller.spans)
        metrics.double_phase_packets = double_phase_packets(controller.spans)
    return world.trace, metrics


def compute_metrics(trace: Trace) -> Metrics:
    """Recompute metrics from a trace alone (the independent accounting path;
    run() keeps live counters that must agree with this)."""
    metrics = Metrics()
    injected = 0
    heard = 0
    heard_at: dict[PacketId, int] = {}
    packets: list[tuple[PacketId, int]] = []
    for idx, kind in enumerate(trace.feedback):
        round_no = idx + 1
        if kind == "H":
            metrics.heard_rounds += 1
            pid = trace.heard_packet[idx]
            assert pid is not None
            heard_at[pid] = round_no
            heard += 1
        elif kind == "C":
            metrics.collision_rounds += 1
        else:
            metrics.silent_rounds += 1
        seq = 0
        for _, count, _ in trace.injections[idx]:
            injected += count
            for _ in range(count):
                packets.append((PacketId(round_no, seq), round_no))
                seq += 1
        metrics.queued_series.append(injected - heard)
    metrics.max_queued = max(metrics.queued_series, default=0)
    metrics.per_packet = [(pid, rnd, heard_at.get(pid)) for pid, rnd in packets]
    metrics.unheard_count = sum(1 for _, _, h in metrics.per_packet if h is None)
    metrics.max_latency = max(metrics.latencies(), default=0)
    return metrics


def schedule_from_trace(trace: Trace) -> list[dict[str, Any]]:
    """Recover a scripted schedule that replays the trace's injections."""
    entries = []
    for idx, log in enumerate(trace.injections):
        for sid, count, fresh_flag in log:
            entries.append(
                {
                    "round": idx + 1,
                    "station": "fresh" if fresh_flag else sid.activation_round,
                    "packets": count,
                }
            )
    return entries


def injection_counts(trace: Trace) -> list[int]:
    return [sum(count for _, count, _ in log) for log in trace.injections]


def write_trace_csv(trace: Trace, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["round", "feedback", "transmitters", "heard_packet", "injections"])
        for idx in range(len(trace)):
            heard = trace.heard_packet[idx]
            writer.writerow(
                [
                    idx + 1,
                    trace.feedback[idx],
                    ";".join(sid.label() for sid in trace.transmitters[idx]),
                    "" if heard is None else f"{heard.injection_round}:{heard.sequence_within_round}",
                    ";".join(
                        f"{sid.label()}:{count}" for sid, count, _ in trace.injections[idx]
                    ),
                ]
            )


def write_metrics_json(metrics: Metrics, path: str) -> None:
    with open(path, "w") as handle:
        handle.write(metrics.to_json())
        handle.write("\n")
