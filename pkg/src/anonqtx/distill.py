"""Threshold model of one-way entanglement distillation on Bell-diagonal ensembles.

An ensemble of ``r`` pairs is distillable iff it contains fewer than
``theta * r`` non-PHI+ pairs (strict). The receiver-to-sender transcript is
simulated as parity-check announcements: the number of checks depends only
on ``r`` and ``theta`` and the announced parities are R-side measurement
results, which are uniform for any Bell-diagonal pair. Nothing in the
transcript therefore depends on which pairs were faulty.

Yield on acceptance is ``floor((1 - 2 h(e)) r)`` clamped to at least one
pair, with ``e`` the error fraction and ``h`` binary entropy. It is a
reporting figure only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qsim import BellLabel

R_TO_S = "R->S"


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")


@dataclass
class BellDiagonalEnsemble:
    pairs: list
    provenance: list | None = None

    def __post_init__(self):
        self.pairs = [BellLabel(p) for p in self.pairs]
        if self.provenance is not None and len(self.provenance) != len(self.pairs):
            raise ValueError("provenance must have one entry per pair")

    def __len__(self):
        return len(self.pairs)

    @property
    def errors(self) -> int:
        return sum(p is not BellLabel.PHI_PLUS for p in self.pairs)

    @property
    def error_fraction(self) -> float:
        return self.errors / len(self.pairs) if self.pairs else 0.0

    @classmethod
    def from_pairs(cls, records) -> "BellDiagonalEnsemble":
        return cls([r.label for r in records], [r.distributor for r in records])


@dataclass
class DistillOutcome:
    accepted: bool
    distilled_count: int
    size: int
    errors: int
    transcript: list = field(default_factory=list)

    def __post_init__(self):
        if not self.accepted and self.distilled_count:
            raise ValueError("rejected ensembles yield nothing")
        if any(msg["direction"] != R_TO_S for msg in self.transcript):
            raise ValueError("one-way transcript may only carry R->S messages")

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted, "distilled_count": self.distilled_count,
            "size": self.size, "errors": self.errors, "transcript": self.transcript,
        }


def _transcript(r: int, theta: float, rng: np.random.Generator) -> list:
    checks = min(r, math.ceil(2 * binary_entropy(theta) * r)) if r else 0
    out = []
    for _ in range(checks):
        subset = sorted(int(k) for k in np.flatnonzero(rng.random(r) < 0.5))
        out.append({"direction": R_TO_S, "subset": subset, "parity": int(rng.random() < 0.5)})
    return out


def one_way_distill(ensemble: BellDiagonalEnsemble | Sequence, theta: float,
                    rng: np.random.Generator, yield_rate: float | None = None) -> DistillOutcome:
    """Accept iff errors < theta * size; an empty ensemble is rejected."""
    _check_theta(theta)
    if not isinstance(ensemble, BellDiagonalEnsemble):
        ensemble = BellDiagonalEnsemble(list(ensemble))
    r, errors = len(ensemble), ensemble.errors
    transcript = _transcript(r, theta, rng)
    accepted = r > 0 and errors < theta * r
    count = 0
    if accepted:
        rate = yield_rate if yield_rate is not None else 1 - 2 * binary_entropy(errors / r)
        count = max(1, math.floor(rate * r))
    return DistillOutcome(accepted, count, r, errors, transcript)


@dataclass
class DistillReport:
    """Per-distributor distillation, as the sender sees it.

    ``outcomes`` is sender-only knowledge unless ``reveal`` is set, in which
    case the acceptance map is also handed to the receiver (the variant that
    is only safe when R does not collude).
    """

    outcomes: dict
    reveal: bool = False
    combined: DistillOutcome | None = None

    @property
    def anonymity_weakening(self) -> bool:
        return self.reveal

    def acceptance(self) -> dict:
        return {k: v.accepted for k, v in sorted(self.outcomes.items())}

    def receiver_visible(self) -> dict:
        d = {"transcripts": {str(k): v.transcript for k, v in sorted(self.outcomes.items())}}
        if self.reveal:
            d["acceptance"] = {str(k): v for k, v in self.acceptance().items()}
        return d

    def receiver_serialization(self) -> str:
        return json.dumps(self.receiver_visible(), sort_keys=True, separators=(",", ":"))

    def to_dict(self) -> dict:
        d = {
            "variant": "reveal" if self.reveal else ("combined" if self.combined else "per_distributor"),
            "anonymity_weakening": self.anonymity_weakening,
            "sender_only": {str(k): v.to_dict() for k, v in sorted(self.outcomes.items())},
            "receiver_visible": self.receiver_visible(),
        }
        if self.combined is not None:
            d["combined"] = self.combined.to_dict()
        return d


def _buckets(result) -> dict:
    buckets: dict = {}
    for pr in result.pairs:
        buckets.setdefault(pr.distributor, []).append(pr)
    return buckets


def per_distributor_distill(result, theta: float, rng: np.random.Generator, reveal: bool = False) -> DistillReport:
    """Distil each distributor's pairs separately; acceptance stays with the sender."""
    _check_theta(theta)
    outcomes = {
        i: one_way_distill(BellDiagonalEnsemble.from_pairs(prs), theta, rng)
        for i, prs in sorted(_buckets(result).items())
    }
    return DistillReport(outcomes, reveal=reveal)


def combined_distill(result, theta: float, rng: np.random.Generator) -> DistillOutcome:
    """Pool every pair regardless of per-bucket outcome and distil once."""
    return one_way_distill(BellDiagonalEnsemble.from_pairs(result.pairs), theta, rng)


def reveal_variant_distill(result, theta: float, rng: np.random.Generator) -> DistillReport:
    """Per-distributor distillation with the acceptance map disclosed to R."""
    return per_distributor_distill(result, theta, rng, reveal=True)
