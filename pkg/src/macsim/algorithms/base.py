"""Protocol contract shared by all station state machines.

Per-round action order is fixed: (i) transmit, (ii) receive feedback,
(iii) have new packets injected, (iv) make a state transition. The simulator
drives stations through exactly that order; `transition` runs in phase (iv)
with `still_active` already reflecting the dequeue of a heard packet and the
enqueue of same-round injections.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Optional, TYPE_CHECKING

from ..core import Feedback, StationId

if TYPE_CHECKING:
    from .quadruple_round import QuadrupleController


@dataclass(slots=True)
class RoundContext:
    """Read-only per-round context handed to decide()."""

    round_no: int
    controller: Optional["QuadrupleController"] = None


class Algorithm(ABC):
    """A broadcast algorithm: per-station state plus decide/transition rules.

    A station scheduled to transmit with an empty packet queue stays silent;
    that guard is enforced centrally by the simulator, so `wants_transmit`
    only expresses the schedule.
    """

    name: ClassVar[str]
    adaptive: ClassVar[bool] = False
    full_sensing: ClassVar[bool] = False
    requires_collision_detection: ClassVar[bool] = True

    @abstractmethod
    def initial_state(self, station: StationId) -> Any:
        ...

    @abstractmethod
    def wants_transmit(self, station: StationId, state: Any, ctx: RoundContext) -> bool:
        ...

    def message_content(self, state: Any, queue_len: int) -> tuple[Optional[int], bool]:
        """(control_queue_size, over_bit) attached to a transmission.

        Non-adaptive algorithms emit bare messages.
        """
        return (None, False)

    @abstractmethod
    def transition(
        self,
        station: StationId,
        state: Any,
        observed: Feedback,
        own_heard: bool,
        still_active: bool,
    ) -> None:
        """Update private variables in place at phase (iv)."""

    def is_passive(self, state: Any) -> bool:
        """Whether the state equals the initial one (passive stations idle there)."""
        return state == self.initial_state(StationId(0))
