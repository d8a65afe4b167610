"""Station state machines behind a single protocol contract."""

from __future__ import annotations

from typing import Optional

from ..core import ConfigError
from .ack_persistent import AckPersistent
from .base import Algorithm, RoundContext
from .counting_backoff import CountingBackoff, CountingBackoffState
from .quadruple_round import (
    PhaseSpan,
    QuadrupleController,
    QuadrupleRound,
    Stage,
    double_phase_lengths,
    double_phase_packets,
    position_in_segment,
    segment_first_round,
    segment_of,
)
from .queue_backoff import QueueBackoff, QueueBackoffState, VARIANTS as QUEUE_BACKOFF_VARIANTS

ALGORITHM_NAMES = ("counting-backoff", "queue-backoff", "quadruple-round", "ack-persistent")


def make_algorithm(name: str, variant: Optional[str] = None) -> Algorithm:
    if name == "counting-backoff":
        algorithm: Algorithm = CountingBackoff()
    elif name == "queue-backoff":
        algorithm = QueueBackoff(variant or "reconciled")
        variant = None
    elif name == "quadruple-round":
        algorithm = QuadrupleRound()
    elif name == "ack-persistent":
        algorithm = AckPersistent()
    else:
        raise ConfigError(f"unknown algorithm {name!r}, pick one of {ALGORITHM_NAMES}")
    if variant is not None:
        raise ConfigError(f"algorithm {name!r} takes no variant")
    return algorithm


__all__ = [
    "ALGORITHM_NAMES",
    "AckPersistent",
    "Algorithm",
    "CountingBackoff",
    "CountingBackoffState",
    "PhaseSpan",
    "QUEUE_BACKOFF_VARIANTS",
    "QuadrupleController",
    "QuadrupleRound",
    "QueueBackoff",
    "QueueBackoffState",
    "RoundContext",
    "Stage",
    "double_phase_lengths",
    "double_phase_packets",
    "make_algorithm",
    "position_in_segment",
    "segment_first_round",
    "segment_of",
]
