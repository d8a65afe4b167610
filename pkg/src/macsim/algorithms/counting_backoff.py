"""Non-adaptive activation-based backoff keeping a global virtual stack.

Active stations maintain one integer counter interpreted as a stack position
(1 = top). A station transmits while its counter is at most 1; collisions push
(everyone increments), silent rounds pop (everyone decrements), and a station
whose own message was heard keeps the top slot while it still has packets.
Requires collision detection: the transition distinguishes silence from
collision.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import Feedback, FeedbackKind, StationId
from .base import Algorithm, RoundContext


@dataclass(slots=True, eq=True)
class CountingBackoffState:
    backoff_counter: int = 0


class CountingBackoff(Algorithm):
    name = "counting-backoff"
    adaptive = False
    full_sensing = False
    requires_collision_detection = True

    def initial_state(self, station: StationId) -> CountingBackoffState:
        return CountingBackoffState()

    def wants_transmit(
        self, station: StationId, state: CountingBackoffState, ctx: RoundContext
    ) -> bool:
        return state.backoff_counter <= 1

    def transition(
        self,
        station: StationId,
        state: CountingBackoffState,
        observed: Feedback,
        own_heard: bool,
        still_active: bool,
    ) -> None:
        kind = observed.kind
        if kind is FeedbackKind.COLLISION:
            state.backoff_counter += 1
        elif kind is FeedbackKind.SILENCE:
            state.backoff_counter -= 1
        elif kind is FeedbackKind.HEARD:
            if own_heard:
                state.backoff_counter = 1 if still_active else 0
            # A foreign message leaves the counter unchanged.
