"""Resolves simultaneous transmissions into channel feedback and applies the
collision-detection collapse."""

from __future__ import annotations

from typing import Sequence

from .core import (
    COLLISION,
    SILENCE,
    VOID,
    ChannelMode,
    Feedback,
    FeedbackKind,
    Message,
    SimulationError,
)


def resolve_round(transmissions: Sequence[Message]) -> Feedback:
    """No transmission -> silence; exactly one -> that message is heard;
    two or more -> collision."""
    if not transmissions:
        return SILENCE
    if len(transmissions) == 1:
        return Feedback.heard(transmissions[0])
    senders = {m.sender for m in transmissions}
    if len(senders) != len(transmissions):
        raise SimulationError("duplicate sender in one round")
    return COLLISION


def observe(feedback: Feedback, mode: ChannelMode) -> Feedback:
    """What stations perceive. Without collision detection, silence and collision
    are both perceived as a void round; heard messages are always delivered."""
    if mode.collision_detection:
        return feedback
    if feedback.kind in (FeedbackKind.SILENCE, FeedbackKind.COLLISION):
        return VOID
    return feedback
