"""Shared domain types, exact rational rates, and run configuration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, NamedTuple, Optional


class ConfigError(ValueError):
    """A run configuration or schedule is invalid."""


class SimulationError(RuntimeError):
    """The simulator detected an integrity violation (duplicate sender, overspend, ...)."""


# Rates and budgets are exact rationals; no floating point anywhere in budget
# or bound arithmetic.
Rate = Fraction


def rate_make(numerator: int, denominator: int) -> Rate:
    """Build a rate in lowest terms. Rejects zero denominators and negative values."""
    if denominator == 0:
        raise ConfigError("rate denominator must be non-zero")
    value = Fraction(numerator, denominator)
    if value < 0:
        raise ConfigError(f"rate must be non-negative, got {value}")
    return value


def parse_rate(text: str) -> Rate:
    """Parse 'p/q' or an integer string. Decimal input is rejected (no silent rounding)."""
    text = text.strip()
    if "." in text:
        raise ConfigError(f"decimal rates are not accepted, pass a fraction p/q: {text!r}")
    if "/" in text:
        num_s, _, den_s = text.partition("/")
        try:
            return rate_make(int(num_s), int(den_s))
        except ValueError as exc:
            raise ConfigError(f"bad rate {text!r}") from exc
    try:
        return rate_make(int(text), 1)
    except ValueError as exc:
        raise ConfigError(f"bad rate {text!r}") from exc


@dataclass(frozen=True, slots=True)
class AdversaryType:
    """Leaky-bucket adversary: at most rho*|w| + b packets in any window w of rounds,
    activating at most k_activating fresh stations per round."""

    rho: Rate
    b: int
    k_activating: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.rho <= 1):
            raise ConfigError(f"injection rate must be in (0, 1], got {self.rho}")
        if self.b < 1:
            raise ConfigError(f"burstiness parameter b must be >= 1, got {self.b}")
        if self.k_activating < 1:
            raise ConfigError("k_activating must be >= 1")


def burstiness(t: AdversaryType) -> int:
    """Largest number of packets injectable in a single round: floor(rho + b)."""
    return math.floor(t.rho + t.b)


@dataclass(frozen=True, slots=True)
class ChannelMode:
    """With collision detection a silent round and a collision give distinct feedback;
    without it both are observed as a void round."""

    collision_detection: bool = True


class StationId(NamedTuple):
    """Stations are anonymous; an active station is named by its activation round.
    The ordinal disambiguates same-round activations (k-activating >= 2 demos only)."""

    activation_round: int
    ordinal: int = 0

    def label(self) -> str:
        if self.ordinal:
            return f"{self.activation_round}.{self.ordinal}"
        return str(self.activation_round)


class PacketId(NamedTuple):
    injection_round: int
    sequence_within_round: int


@dataclass(frozen=True, slots=True)
class Message:
    """One transmission: the packet plus control bits (adaptive algorithms only).

    The sender field is simulator bookkeeping used solely to classify a heard
    message as own/foreign at the transmitting station; no other station's
    transition ever reads it.
    """

    packet: PacketId
    sender: StationId
    control_queue_size: Optional[int] = None
    over_bit: bool = False


class FeedbackKind(Enum):
    SILENCE = "S"
    COLLISION = "C"
    HEARD = "H"
    VOID = "V"


@dataclass(frozen=True, slots=True)
class Feedback:
    """Channel outcome of one round. VOID only appears as an observation on
    channels without collision detection, never as a raw outcome."""

    kind: FeedbackKind
    message: Optional[Message] = None

    @staticmethod
    def heard(message: Message) -> "Feedback":
        return Feedback(FeedbackKind.HEARD, message)

    @property
    def is_heard(self) -> bool:
        return self.kind is FeedbackKind.HEARD


SILENCE = Feedback(FeedbackKind.SILENCE)
COLLISION = Feedback(FeedbackKind.COLLISION)
VOID = Feedback(FeedbackKind.VOID)


@dataclass(frozen=True)
class StrategySpec:
    """Injection strategy selection: registry name plus strategy-specific parameters."""

    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    adversary_type: AdversaryType
    strategy: StrategySpec
    horizon: int
    channel_mode: ChannelMode = ChannelMode(True)
    invariant_checks: bool = False
    seed: int = 0
    # Algorithm behaviour variant; queue-backoff accepts "reconciled" (default),
    # "figure" and "prose" join-rule variants for comparison runs.
    variant: Optional[str] = None

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_json(self) -> str:
        doc = {
            "algorithm": self.algorithm,
            "adversary_type": {
                "rho": {"numerator": self.rho.numerator, "denominator": self.rho.denominator},
                "b": self.adversary_type.b,
                "k_activating": self.adversary_type.k_activating,
            },
            "strategy": {"name": self.strategy.name, "params": self.strategy.params},
            "channel_mode": {"collision_detection": self.channel_mode.collision_detection},
            "horizon": self.horizon,
            "invariant_checks": self.invariant_checks,
            "seed": self.seed,
        }
        if self.variant is not None:
            doc["variant"] = self.variant
        return json.dumps(doc, indent=2)

    @property
    def rho(self) -> Rate:
        return self.adversary_type.rho

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config JSON: {exc}") from exc
        try:
            rho_doc = doc["adversary_type"]["rho"]
            adversary = AdversaryType(
                rho=rate_make(rho_doc["numerator"], rho_doc["denominator"]),
                b=doc["adversary_type"]["b"],
                k_activating=doc["adversary_type"].get("k_activating", 1),
            )
            strategy = StrategySpec(
                name=doc["strategy"]["name"],
                params=doc["strategy"].get("params", {}),
            )
            mode = ChannelMode(doc.get("channel_mode", {}).get("collision_detection", True))
            return RunConfig(
                algorithm=doc["algorithm"],
                adversary_type=adversary,
                strategy=strategy,
                horizon=doc["horizon"],
                channel_mode=mode,
                invariant_checks=doc.get("invariant_checks", False),
                seed=doc.get("seed", 0),
                variant=doc.get("variant"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"config document is missing fields: {exc}") from exc
