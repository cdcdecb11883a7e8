"""Corruption model: one adversary controlling a collusion of participants.

Strategies are plain data; the protocol engine asks them what to do at the
three points where a corrupted participant can deviate: before measuring a
held system, when reporting an outcome, and when distributing its own state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .qsim import DualOutcome


class Kind(str, Enum):
    PASSIVE = "PASSIVE"
    FLIP_OUTCOME = "FLIP_OUTCOME"
    TRAP_GUESS = "TRAP_GUESS"
    TARGETED_NOISE = "TARGETED_NOISE"
    PRODUCT_DISTRIBUTOR = "PRODUCT_DISTRIBUTOR"


class Disrupt(str, Enum):
    DEPOLARIZE = "DEPOLARIZE"
    PHASE_FLIP = "PHASE_FLIP"


@dataclass(frozen=True)
class AdversaryStrategy:
    """What the corrupted participants do.

    ``prob`` is the per-report flip probability of FLIP_OUTCOME; ``xi`` the
    wrong-guess probability of TRAP_GUESS; ``target`` the honest participant
    singled out by TARGETED_NOISE. ``victims`` limits disruption to systems
    from those distributors (None: every distributor outside the collusion)
    and ``budget`` caps the number of disrupted systems per corrupted
    participant (None: unlimited).
    """

    kind: Kind = Kind.PASSIVE
    prob: float = 0.0
    xi: float = 0.0
    disrupt_action: Disrupt = Disrupt.DEPOLARIZE
    target: int | None = None
    victims: frozenset | None = None
    budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "disrupt_action", Disrupt(self.disrupt_action))
        for name in ("prob", "xi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.kind is Kind.TARGETED_NOISE and self.target is None:
            raise ValueError("TARGETED_NOISE needs a target")
        if self.victims is not None:
            object.__setattr__(self, "victims", frozenset(self.victims))
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is Kind.FLIP_OUTCOME:
            d["prob"] = self.prob
        if self.kind is Kind.TRAP_GUESS:
            d["xi"] = self.xi
            d["disrupt_action"] = self.disrupt_action.value
        if self.kind is Kind.TARGETED_NOISE:
            d["target"] = self.target
        if self.victims is not None:
            d["victims"] = sorted(self.victims)
        if self.budget is not None:
            d["budget"] = self.budget
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryStrategy":
        d = dict(d)
        known = {"kind", "prob", "xi", "disrupt_action", "target", "victims", "budget"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown strategy keys: {sorted(extra)}")
        if "victims" in d and d["victims"] is not None:
            d["victims"] = frozenset(d["victims"])
        return cls(**d)


PASSIVE = AdversaryStrategy()


@dataclass(frozen=True)
class CollusionSpec:
    corrupted: frozenset = field(default_factory=frozenset)
    strategy: AdversaryStrategy = PASSIVE

    def __post_init__(self):
        object.__setattr__(self, "corrupted", frozenset(self.corrupted))

    def __contains__(self, pid) -> bool:
        return pid in self.corrupted

    def validate(self, n: int, sender: int) -> None:
        if sender in self.corrupted:
            raise ValueError("the sender cannot be corrupted")
        bad = [c for c in self.corrupted if not 0 <= c < n]
        if bad:
            raise ValueError(f"corrupted participants out of range: {bad}")
        t = self.strategy.target
        if t is not None and not 0 <= t < n:
            raise ValueError(f"target {t} out of range")

    def to_dict(self) -> dict:
        return {"corrupted": sorted(self.corrupted), "strategy": self.strategy.to_dict()}

    @classmethod
    def from_dict(cls, d: dict | None) -> "CollusionSpec":
        if not d:
            return cls()
        extra = set(d) - {"corrupted", "strategy"}
        if extra:
            raise ValueError(f"unknown adversary keys: {sorted(extra)}")
        return cls(frozenset(d.get("corrupted", ())), AdversaryStrategy.from_dict(d.get("strategy", {"kind": "PASSIVE"})))


HONEST = CollusionSpec()


@dataclass(frozen=True)
class ReportContext:
    """What the engine knows when a corrupted participant reports.

    ``is_trap``/``trap_state`` are god-view facts; only the TRAP_GUESS oracle
    reads them, standing in for the adversary's side information.
    """

    distributor: int
    is_trap: bool
    trap_state: DualOutcome | None = None
    disrupting: bool = False


def disrupts(strategy: AdversaryStrategy, collusion: CollusionSpec, distributor: int, done: int) -> bool:
    """Whether a corrupted measurer disrupts the next system it holds from ``distributor``.

    Only FLIP_OUTCOME and TRAP_GUESS disrupt at measurement time, and never
    on systems the collusion distributed itself.
    """
    if strategy.kind not in (Kind.FLIP_OUTCOME, Kind.TRAP_GUESS):
        return False
    if distributor in collusion.corrupted:
        return False
    if strategy.victims is not None and distributor not in strategy.victims:
        return False
    return strategy.budget is None or done < strategy.budget


def act_on_report(strategy: AdversaryStrategy, true_outcome: DualOutcome, context: ReportContext, u: float) -> DualOutcome:
    """Outcome a corrupted participant reports, given one uniform variate ``u``.

    A disrupting FLIP_OUTCOME participant flips with probability ``prob``. A disrupting TRAP_GUESS
    participant facing a trap answers consistently with the trap state with
    probability ``1 - xi``; on an actual-mode system it reports what it
    measured after disturbing the qubit.
    """
    if strategy.kind is Kind.FLIP_OUTCOME and context.disrupting:
        return true_outcome.flipped() if u < strategy.prob else true_outcome
    if strategy.kind is Kind.TRAP_GUESS and context.disrupting and context.is_trap:
        return context.trap_state.flipped() if u < strategy.xi else context.trap_state
    return true_outcome


def pre_measure_action(strategy: AdversaryStrategy, disrupting: bool) -> str | None:
    """Operation applied to a held qubit before measuring: ``"Z"``, ``"DEPOLARIZE"`` or None."""
    if not disrupting or strategy.kind is not Kind.TRAP_GUESS:
        return None
    return "Z" if strategy.disrupt_action is Disrupt.PHASE_FLIP else "DEPOLARIZE"


@dataclass(frozen=True)
class AdversaryView:
    """Everything the collusion observes in one run."""

    corrupted: tuple
    records: dict
    log: list

    def to_dict(self) -> dict:
        return {"corrupted": list(self.corrupted), "records": self.records, "log": self.log}

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def is_empty(self) -> bool:
        return not self.records and not self.log


def build_view(log, participants, collusion: CollusionSpec) -> AdversaryView:
    """Extract the collusion's view: its members' records plus every log field they can see."""
    members = sorted(collusion.corrupted)
    records = {str(p): participants[p].record() for p in members}
    return AdversaryView(tuple(members), records, log.view_for(members))


def is_subview(small: AdversaryView, big: AdversaryView) -> bool:
    """``small`` is contained in ``big``: fewer records and no extra log fields."""
    if not set(small.corrupted) <= set(big.corrupted):
        return False
    if any(big.records.get(k) != v for k, v in small.records.items()):
        return False
    if not small.log:
        return True
    if len(small.log) != len(big.log):
        return False
    return all(all(b.get(k) == v for k, v in s.items()) for s, b in zip(small.log, big.log))
