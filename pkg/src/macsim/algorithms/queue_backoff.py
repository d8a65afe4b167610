"""Adaptive activation-based backoff keeping a global virtual FIFO queue.

Messages carry the sender's queue_size (K) and an "over" bit marking its last
queued packet. A station transmits while queue_position is 0 or 1; collisions
either grow every informed station's queue_size or, for a still-uninformed
station, start counting collisions; a heard message with K > 0 lets an
uninformed station join the queue; "over" shifts the whole queue forward.

Join-rule variants (selectable per run):

  reconciled  queue_position <- K - collision_count     when the join message carries "over"
              queue_position <- K - collision_count + 1 otherwise;
              queue_size copies K minus 1 when "over" (the sender departs in
              the same round and K still counts it).
  figure      queue_position <- K - collision_count, queue_size <- K, always.
  prose       queue_position <- K - collision_count + 1, queue_size <- K, always.

"reconciled" is the default: it is the only variant under which the global
queue invariants (distinct positions filling [1, k], queue_size = number of
established active stations) hold on worst-case executions; the other two are
kept for side-by-side adjudication and each violates an invariant on the
queue-persistent schedule.

Works on channels without collision detection: an active station perceives a
void round as the collision branch (while the queue is non-empty every round
is a collision or a heard message, so nothing else is ever observed).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import ConfigError, Feedback, FeedbackKind, StationId
from .base import Algorithm, RoundContext

VARIANTS = ("reconciled", "figure", "prose")


@dataclass(slots=True, eq=True)
class QueueBackoffState:
    queue_size: int = 0
    queue_position: int = 0
    collision_count: int = 0


class QueueBackoff(Algorithm):
    name = "queue-backoff"
    adaptive = True
    full_sensing = False
    requires_collision_detection = False

    def __init__(self, variant: str = "reconciled") -> None:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown queue-backoff variant {variant!r}, pick one of {VARIANTS}")
        self.variant = variant

    def initial_state(self, station: StationId) -> QueueBackoffState:
        return QueueBackoffState()

    def wants_transmit(
        self, station: StationId, state: QueueBackoffState, ctx: RoundContext
    ) -> bool:
        return 0 <= state.queue_position <= 1

    def message_content(self, state: QueueBackoffState, queue_len: int) -> tuple[int, bool]:
        return (state.queue_size, queue_len == 1)

    def transition(
        self,
        station: StationId,
        state: QueueBackoffState,
        observed: Feedback,
        own_heard: bool,
        still_active: bool,
    ) -> None:
        kind = observed.kind
        if kind is FeedbackKind.COLLISION or kind is FeedbackKind.VOID:
            if state.queue_size > 0:
                state.queue_size += 1
            else:
                state.queue_position = -1
                state.collision_count += 1
            return
        if kind is not FeedbackKind.HEARD:
            return  # silence carries no information for this algorithm
        message = observed.message
        assert message is not None
        if own_heard:
            if state.queue_size == 0 and still_active:
                state.queue_size = 1
                state.queue_position = 1
            return
        k = message.control_queue_size or 0
        if k > 0 and state.queue_position == -1:
            self._join(state, k, message.over_bit)
        elif message.over_bit and (k > 0 or self.variant != "reconciled"):
            state.queue_size -= 1
            state.queue_position -= 1

    def _join(self, state: QueueBackoffState, k: int, over: bool) -> None:
        if self.variant == "figure":
            state.queue_size = k
            state.queue_position = k - state.collision_count
        elif self.variant == "prose":
            state.queue_size = k
            state.queue_position = k - (state.collision_count - 1)
        else:
            state.queue_size = k - 1 if over else k
            state.queue_position = k - state.collision_count + (0 if over else 1)
