"""Leaky-bucket budget enforcement and the injection strategies.

The online enforcer is a token bucket holding exact rationals: capacity and
initial value rho + b, refill rho per round. Tokens are stored as an integer
numerator over the fixed denominator q of rho, so every floor and comparison
is exact integer arithmetic. Its equivalence to the defining all-windows
constraint is not assumed; `validate_trace` is the independent brute-force
oracle and the two are fuzzed against each other in the test suite.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, ClassVar, Iterable, Mapping, Optional, Protocol, Sequence

from .core import (
    AdversaryType,
    ConfigError,
    Feedback,
    FeedbackKind,
    Rate,
    RunConfig,
    SimulationError,
    StationId,
)


class BudgetViolation(SimulationError):
    """A strategy asked for more packets than the bucket holds."""


class BudgetState:
    """Token bucket over exact rationals, plus the per-round spend history.

    Numerators are kept in units of 1/q where q is the rate denominator, so
    advance/spend/floor are plain integer operations.
    """

    __slots__ = ("rho_num", "q", "b", "cap_num", "tokens_num", "history")

    def __init__(self, adversary: AdversaryType) -> None:
        rho = adversary.rho
        self.rho_num = rho.numerator
        self.q = rho.denominator
        self.b = adversary.b
        self.cap_num = self.rho_num + adversary.b * self.q
        # Round 1 starts with the full budget rho + b.
        self.tokens_num = self.cap_num
        self.history: list[int] = [0]

    @property
    def tokens(self) -> Fraction:
        return Fraction(self.tokens_num, self.q)

    def floor_tokens(self) -> int:
        return self.tokens_num // self.q

    def advance(self) -> None:
        """Start a new round: tokens <- min(tokens + rho, rho + b)."""
        self.tokens_num = min(self.tokens_num + self.rho_num, self.cap_num)
        self.history.append(0)

    def spend(self, n: int) -> None:
        if n < 0:
            raise BudgetViolation("cannot spend a negative packet count")
        if n > self.floor_tokens():
            raise BudgetViolation(
                f"injection of {n} packets exceeds available budget {self.tokens}"
            )
        self.tokens_num -= n * self.q
        self.history[-1] += n


def budget_new(adversary: AdversaryType) -> BudgetState:
    return BudgetState(adversary)


def budget_advance(bs: BudgetState) -> BudgetState:
    bs.advance()
    return bs


def budget_spend(bs: BudgetState, n: int) -> BudgetState:
    bs.spend(n)
    return bs


def validate_trace(injections: Sequence[int], adversary: AdversaryType) -> bool:
    """Brute-force oracle: every contiguous window [s, e] carries at most
    floor(rho * (e - s + 1) + b) packets.

    Only windows whose endpoints carry injections need checking: trimming
    empty end rounds keeps the sum and shrinks the allowance.
    """
    p, q, b = adversary.rho.numerator, adversary.rho.denominator, adversary.b
    rounds = [i for i, n in enumerate(injections) if n]
    for start_idx, s in enumerate(rounds):
        total = 0
        for e in rounds[start_idx:]:
            total += injections[e]
            length = e - s + 1
            if total > b + (p * length) // q:
                return False
    return True


def min_burstiness(injections: Sequence[int], rho: Rate) -> int:
    """Smallest b >= 1 such that the schedule is valid for type (rho, b)."""
    p, q = rho.numerator, rho.denominator
    rounds = [i for i, n in enumerate(injections) if n]
    worst = 1
    for start_idx, s in enumerate(rounds):
        total = 0
        for e in rounds[start_idx:]:
            total += injections[e]
            length = e - s + 1
            worst = max(worst, total - (p * length) // q)
    return worst


@dataclass(frozen=True, slots=True)
class Injection:
    """One injection decision: packets for a fresh passive station
    (target None) or for an already-active station."""

    target: Optional[StationId]
    packets: int


class WorldView(Protocol):
    """What a strategy may read: the full simulator state (the adversary is an
    omniscient worst-case device) plus the current round's feedback."""

    round_no: int
    feedback: Feedback
    budget: BudgetState
    stations: Mapping[StationId, Any]


class Strategy(ABC):
    name: ClassVar[str]

    def bind(self, config: RunConfig) -> None:
        """Run-start hook for compatibility and schedule validation."""

    @abstractmethod
    def inject(self, world: WorldView) -> list[Injection]:
        """Called in phase (iii), after this round's feedback is known."""


def _fresh(n: int) -> list[Injection]:
    return [Injection(None, n)]


class SaturatingStrategy(Strategy):
    """Inject floor(tokens) packets into one fresh station whenever possible."""

    name = "saturating"

    def inject(self, world: WorldView) -> list[Injection]:
        n = world.budget.floor_tokens()
        return _fresh(n) if n >= 1 else []


class BernoulliStrategy(Strategy):
    """Inject one packet into a fresh station with probability p when a whole
    token is available. Deterministic under the run seed."""

    name = "bernoulli"

    def __init__(self, p: Optional[Rate] = None, seed: int = 0) -> None:
        self.p = p
        self.seed = seed
        self._rng = random.Random(seed)

    def bind(self, config: RunConfig) -> None:
        if self.p is None:
            self.p = config.adversary_type.rho
        if not (0 <= self.p <= 1):
            raise ConfigError(f"bernoulli probability must be in [0, 1], got {self.p}")
        self._rng = random.Random(self.seed if self.seed else config.seed)

    def inject(self, world: WorldView) -> list[Injection]:
        if world.budget.floor_tokens() >= 1 and self._rng.random() < float(self.p or 0):
            return _fresh(1)
        return []


class ScriptedStrategy(Strategy):
    """Replay an explicit schedule of {round, station: "fresh"|activation_round,
    packets} entries, pre-validated against the window oracle."""

    name = "scripted"

    def __init__(self, entries: Iterable[Mapping[str, Any]]) -> None:
        self.by_round: dict[int, list[tuple[Optional[int], int]]] = {}
        for entry in entries:
            try:
                rnd = int(entry["round"])
                packets = int(entry["packets"])
                station = entry.get("station", "fresh")
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad scripted entry {entry!r}") from exc
            if rnd < 1 or packets < 1:
                raise ConfigError(f"bad scripted entry {entry!r}")
            target = None if station == "fresh" else int(station)
            self.by_round.setdefault(rnd, []).append((target, packets))

    def bind(self, config: RunConfig) -> None:
        horizon = max(self.by_round, default=0)
        counts = [0] * horizon
        for rnd, items in self.by_round.items():
            counts[rnd - 1] += sum(n for _, n in items)
        if not validate_trace(counts, config.adversary_type):
            raise ConfigError("scripted schedule violates the adversary budget")
        fresh_per_round = {
            rnd: sum(1 for target, _ in items if target is None)
            for rnd, items in self.by_round.items()
        }
        k = config.adversary_type.k_activating
        for rnd, fresh in fresh_per_round.items():
            if fresh > k:
                raise ConfigError(
                    f"scripted schedule activates {fresh} stations in round {rnd}, adversary is {k}-activating"
                )

    def inject(self, world: WorldView) -> list[Injection]:
        items = self.by_round.get(world.round_no)
        if not items:
            return []
        out = []
        for target, packets in items:
            if target is None:
                out.append(Injection(None, packets))
            else:
                sid = next(
                    (s for s in world.stations if s.activation_round == target), None
                )
                if sid is None:
                    raise SimulationError(
                        f"scripted injection targets station {target}, which is not active in round {world.round_no}"
                    )
                out.append(Injection(sid, packets))
        return out


class StackPersistentStrategy(Strategy):
    """Worst case against counting-backoff.

    Starting a stack costs two packets now plus one next round, so the start
    is attempted only when the bucket covers both steps; if the bucket can
    never afford that (2*rho + b < 3), the strategy degrades to single-packet
    activations. While stations are active it injects one fresh packet
    whenever a whole token is available and some active station will transmit
    next round, so the newcomer's first transmission always collides; after a
    heard message that retires its sender nothing transmits next round and the
    round is left silent.
    """

    name = "stack-persistent"

    def __init__(self) -> None:
        self.formation_due = False

    def bind(self, config: RunConfig) -> None:
        if config.algorithm != "counting-backoff":
            raise ConfigError("stack-persistent runs against counting-backoff only")

    def inject(self, world: WorldView) -> list[Injection]:
        bs = world.budget
        floor = bs.floor_tokens()
        if self.formation_due:
            self.formation_due = False
            return _fresh(1) if floor >= 1 else []
        if not world.stations:
            next_round_tokens = min(bs.tokens_num - 2 * bs.q + bs.rho_num, bs.cap_num)
            if floor >= 2 and next_round_tokens >= bs.q:
                self.formation_due = True
                return _fresh(2)
            if bs.cap_num < 3 * bs.q - bs.rho_num and floor >= 1:
                # A stack can never be afforded; keep single packets flowing.
                return _fresh(1)
            return []
        if floor >= 1 and self._someone_transmits_next_round(world):
            return _fresh(1)
        return []

    @staticmethod
    def _someone_transmits_next_round(world: WorldView) -> bool:
        """Predict phase-(iv) counters from this round's feedback."""
        fb = world.feedback
        kind = fb.kind
        heard_sender = fb.message.sender if fb.message is not None else None
        for sid, st in world.stations.items():
            counter = st.state.backoff_counter
            if kind is FeedbackKind.COLLISION:
                counter += 1
            elif kind is FeedbackKind.SILENCE:
                counter -= 1
            elif sid == heard_sender:
                if len(st.queue) <= 1:
                    continue  # retires
                counter = 1
            if counter <= 1:
                return True
        return False


class QueuePersistentStrategy(Strategy):
    """Worst case against queue-backoff: two packets into the first station,
    then one fresh single-packet station whenever a whole token is available.
    At rate 1/2 this reproduces the maximal growth window of 2(b-1) rounds
    followed by an activation every other round."""

    name = "queue-persistent"

    def bind(self, config: RunConfig) -> None:
        if config.algorithm != "queue-backoff":
            raise ConfigError("queue-persistent runs against queue-backoff only")

    def inject(self, world: WorldView) -> list[Injection]:
        floor = world.budget.floor_tokens()
        if not world.stations:
            n = min(2, floor)
            return _fresh(n) if n >= 1 else []
        return _fresh(1) if floor >= 1 else []


def quadruple_worst_schedule(adversary: AdversaryType, horizon: int) -> list[dict[str, Any]]:
    """Scripted worst-case pattern against quadruple-round at rate 3/8.

    Bursts min(b, floor(tokens)) packets in round 1, then injects single
    packets at fixed double-segment positions whenever a whole token is
    available. Positions {1,3,4} put a colliding pair plus a loner in each
    double segment (ten-round double phases); b = 1 cannot afford adjacent
    activations, so spaced positions {1,4,7} are used instead.
    """
    positions = (1, 4, 7) if adversary.b == 1 else (1, 3, 4)
    bs = BudgetState(adversary)
    entries: list[dict[str, Any]] = []
    for rnd in range(1, horizon + 1):
        if rnd > 1:
            bs.advance()
        pos = (rnd - 1) % 8 + 1
        n = 0
        if rnd == 1:
            n = min(adversary.b, bs.floor_tokens())
        elif pos in positions and bs.floor_tokens() >= 1:
            n = 1
        if n:
            bs.spend(n)
            entries.append({"round": rnd, "station": "fresh", "packets": n})
    return entries


STRATEGY_NAMES = (
    "saturating",
    "scripted",
    "bernoulli",
    "stack-persistent",
    "queue-persistent",
)


def make_strategy(config: RunConfig) -> Strategy:
    name = config.strategy.name
    params = config.strategy.params
    if name == "saturating":
        strategy: Strategy = SaturatingStrategy()
    elif name == "scripted":
        entries = params.get("entries")
        if entries is None:
            raise ConfigError("scripted strategy needs an 'entries' parameter")
        strategy = ScriptedStrategy(entries)
    elif name == "bernoulli":
        p = params.get("p")
        if isinstance(p, str):
            from .core import parse_rate

            p = parse_rate(p)
        strategy = BernoulliStrategy(p=p, seed=params.get("seed", config.seed))
    elif name == "stack-persistent":
        strategy = StackPersistentStrategy()
    elif name == "queue-persistent":
        strategy = QueuePersistentStrategy()
    else:
        raise ConfigError(f"unknown strategy {name!r}, pick one of {STRATEGY_NAMES}")
    strategy.bind(config)
    return strategy
