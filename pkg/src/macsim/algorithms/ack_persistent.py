"""Acknowledgment-based demo protocol: transmit every round while active.

A station resets to the initial state whenever its own transmission is heard,
so it carries no history across successful transmissions; since the initial
state transmits, the whole protocol is "always transmit". It exists to make
the acknowledgment-based unfairness construction runnable.
"""

from __future__ import annotations

from ..core import Feedback, StationId
from .base import Algorithm, RoundContext


class AckPersistent(Algorithm):
    name = "ack-persistent"
    adaptive = False
    full_sensing = False
    requires_collision_detection = False

    def initial_state(self, station: StationId) -> None:
        return None

    def wants_transmit(self, station: StationId, state: None, ctx: RoundContext) -> bool:
        return True

    def transition(
        self,
        station: StationId,
        state: None,
        observed: Feedback,
        own_heard: bool,
        still_active: bool,
    ) -> None:
        return None

    def is_passive(self, state: None) -> bool:
        return True
