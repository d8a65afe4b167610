"""Non-adaptive full-sensing algorithm verifying four-round segments.

Execution rounds are partitioned into segments of four consecutive rounds;
the stations activated in a segment's rounds are cleared by a phase, a loop of
iterations driven entirely by public channel feedback:

  iteration round 1: every station of the segment transmits.
      silence   -> the phase ends (nothing outstanding in the segment)
      heard     -> new iteration (the sender may hold more packets)
      collision -> round 2: the segment's left pair (rounds 1-2) transmits.
          silence   -> both right-pair stations hold packets; they transmit
                       one packet each in rounds 3 and 4, then new iteration
          heard     -> new iteration
          collision -> both left-pair stations hold packets; they transmit
                       one packet each in rounds 3 and 4, then new iteration

The phase for a segment starts no earlier than four rounds after the
segment's first round, and phases run back to back; every full-sensing
station derives the identical controller state from the feedback history
alone. Requires collision detection.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..core import ConfigError, Feedback, FeedbackKind, StationId
from .base import Algorithm, RoundContext

SEGMENT_LENGTH = 4
PHASE_START_DELAY = 4


def segment_of(activation_round: int) -> int:
    return (activation_round - 1) // SEGMENT_LENGTH


def position_in_segment(activation_round: int) -> int:
    """1..4 within the station's segment; 1-2 form the left pair, 3-4 the right."""
    return (activation_round - 1) % SEGMENT_LENGTH + 1


def segment_first_round(segment: int) -> int:
    return SEGMENT_LENGTH * segment + 1


class Stage(Enum):
    IDLE = "idle"
    ITER1 = "iteration-round-1"
    ITER2 = "iteration-round-2"
    RIGHT3 = "right-pair-round-3"
    RIGHT4 = "right-pair-round-4"
    LEFT3 = "left-pair-round-3"
    LEFT4 = "left-pair-round-4"


@dataclass(slots=True)
class PhaseSpan:
    """Rounds spent verifying one segment, and the packets heard while doing so."""

    segment: int
    start: int
    end: int
    packets_heard: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


class QuadrupleController:
    """The phase state machine, a deterministic function of public feedback."""

    __slots__ = ("segment", "stage", "next_start", "phase_start", "heard_in_phase", "spans")

    def __init__(self) -> None:
        self.segment = 0
        self.stage = Stage.IDLE
        self.next_start = segment_first_round(0) + PHASE_START_DELAY
        self.phase_start = 0
        self.heard_in_phase = 0
        self.spans: list[PhaseSpan] = []

    def begin_round(self, round_no: int) -> None:
        """Promote a pending phase at its scheduled start round (call once per round)."""
        if self.stage is Stage.IDLE and round_no == self.next_start:
            self.stage = Stage.ITER1
            self.phase_start = round_no
            self.heard_in_phase = 0

    def should_transmit(self, activation_round: int) -> bool:
        if self.stage is Stage.IDLE or segment_of(activation_round) != self.segment:
            return False
        pos = position_in_segment(activation_round)
        stage = self.stage
        if stage is Stage.ITER1:
            return True
        if stage is Stage.ITER2:
            return pos <= 2
        if stage is Stage.RIGHT3:
            return pos == 3
        if stage is Stage.RIGHT4:
            return pos == 4
        if stage is Stage.LEFT3:
            return pos == 1
        return pos == 2  # LEFT4

    def step(self, round_no: int, feedback: Feedback) -> None:
        """Advance on this round's feedback (call after the channel resolves)."""
        if self.stage is Stage.IDLE:
            return
        kind = feedback.kind
        if kind is FeedbackKind.VOID:
            raise ConfigError("quadruple-round requires collision detection")
        if kind is FeedbackKind.HEARD:
            self.heard_in_phase += 1
        stage = self.stage
        if stage is Stage.ITER1:
            if kind is FeedbackKind.SILENCE:
                self._end_phase(round_no)
            elif kind is FeedbackKind.COLLISION:
                self.stage = Stage.ITER2
            # heard: a new iteration starts next round
        elif stage is Stage.ITER2:
            if kind is FeedbackKind.SILENCE:
                self.stage = Stage.RIGHT3
            elif kind is FeedbackKind.COLLISION:
                self.stage = Stage.LEFT3
            else:
                self.stage = Stage.ITER1
        elif stage is Stage.RIGHT3:
            self.stage = Stage.RIGHT4
        elif stage is Stage.LEFT3:
            self.stage = Stage.LEFT4
        else:  # RIGHT4 / LEFT4 close the iteration
            self.stage = Stage.ITER1

    def _end_phase(self, round_no: int) -> None:
        self.spans.append(PhaseSpan(self.segment, self.phase_start, round_no, self.heard_in_phase))
        self.segment += 1
        self.stage = Stage.IDLE
        self.next_start = max(round_no + 1, segment_first_round(self.segment) + PHASE_START_DELAY)

    def snapshot(self) -> tuple:
        return (self.segment, self.stage, self.next_start, self.phase_start, self.heard_in_phase)


def double_phase_lengths(spans: list[PhaseSpan]) -> list[int]:
    """Lengths of completed double phases (pairs of consecutive segment phases)."""
    return [
        spans[i].length + spans[i + 1].length
        for i in range(0, len(spans) - 1, 2)
    ]


def double_phase_packets(spans: list[PhaseSpan]) -> list[int]:
    return [
        spans[i].packets_heard + spans[i + 1].packets_heard
        for i in range(0, len(spans) - 1, 2)
    ]


class QuadrupleRound(Algorithm):
    name = "quadruple-round"
    adaptive = False
    full_sensing = True
    requires_collision_detection = True

    def initial_state(self, station: StationId) -> None:
        return None

    def wants_transmit(self, station: StationId, state: None, ctx: RoundContext) -> bool:
        assert ctx.controller is not None
        return ctx.controller.should_transmit(station.activation_round)

    def transition(
        self,
        station: StationId,
        state: None,
        observed: Feedback,
        own_heard: bool,
        still_active: bool,
    ) -> None:
        # All shared knowledge lives in the controller, which the simulator
        # steps once per round; stations carry no private variables.
        return None

    def is_passive(self, state: None) -> bool:
        return True
