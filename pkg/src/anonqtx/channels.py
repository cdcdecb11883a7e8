"""Ideal classical anonymity primitives and authenticated quantum channels.

The classical primitives are ideal black boxes: delivery and anonymity hold
by construction and their internal rounds are not modelled. What matters is
the visibility surface each one exposes, which is enforced when an entry is
appended to the :class:`ChannelLog`:

========= ======================================= =========================
kind      everyone sees                           readers additionally see
========= ======================================= =========================
MTAR      step, kind, payload length class        payload, topic
BROADCAST step, kind, payload, topic              (readers default to all)
QSEND     step, kind, from, to                    nothing (contents never)
========= ======================================= =========================

A broadcast may restrict its readers (an encrypted announcement); others then
see only the length class. Sender identity of MTAR and BROADCAST is recorded
in the full log but visible to nobody, and the MTAR receiver is visible only
to the receiver itself.

Length classes are the smallest power of two >= the payload length.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

REDACTED = "⟨redacted⟩"


class Kind(str, Enum):
    MTAR = "MTAR"
    BROADCAST = "BROADCAST"
    QSEND = "QSEND"


class RoutingError(RuntimeError):
    """A message was addressed to or from a participant that does not exist."""


class OwnershipError(RuntimeError):
    """A participant tried to send a qubit handle it does not hold."""


def _text(payload: bytes) -> str:
    # non-UTF-8 bytes are escaped rather than dropped, so views stay injective
    return payload.decode("utf-8", "backslashreplace")


def length_class(n: int) -> int:
    c = 1
    while c < n:
        c <<= 1
    return c


@dataclass(frozen=True)
class Message:
    payload: bytes
    kind: Kind
    topic: str = ""
    step: int = 0

    def __post_init__(self):
        if not isinstance(self.payload, bytes):
            raise TypeError("payload must be bytes")

    def text(self) -> str:
        return _text(self.payload)


@dataclass(frozen=True)
class LogEntry:
    step: int
    kind: Kind
    topic: str
    payload: bytes
    sender: int
    receiver: int | None = None
    readers: frozenset | None = None  # None: everyone can read the payload

    def can_read(self, pid: int) -> bool:
        if self.kind is Kind.QSEND:
            return False
        if self.kind is Kind.MTAR:
            return pid == self.receiver
        return self.readers is None or pid in self.readers

    def public(self) -> dict:
        d = {"step": self.step, "kind": self.kind.value}
        if self.kind is Kind.QSEND:
            d["from"], d["to"] = self.sender, self.receiver
        elif self.kind is Kind.BROADCAST and self.readers is None:
            d["topic"], d["payload"] = self.topic, _text(self.payload)
        else:
            d["length_class"] = length_class(len(self.payload))
        return d

    def view_for(self, observers: Iterable[int]) -> dict:
        """Fields visible to at least one of ``observers``."""
        d = self.public()
        if any(self.can_read(p) for p in observers):
            d["topic"], d["payload"] = self.topic, _text(self.payload)
        return d

    def visibility(self) -> str:
        if self.kind is Kind.QSEND:
            return "metadata:all"
        if self.kind is Kind.MTAR:
            return "payload:receiver"
        return "payload:all" if self.readers is None else "payload:readers"

    def jsonl_record(self) -> dict:
        rec = {"step": self.step, "kind": self.kind.value, "visibility": self.visibility()}
        pub = self.public()
        rec["payload"] = pub.get("payload", REDACTED)
        if self.kind is Kind.QSEND:
            rec["meta"] = {"from": self.sender, "to": self.receiver}
        elif "length_class" in pub:
            rec["length_class"] = pub["length_class"]
        return rec


@dataclass
class ChannelLog:
    entries: list[LogEntry] = field(default_factory=list)

    def append(self, entry: LogEntry) -> None:
        if self.entries and entry.step < self.entries[-1].step:
            raise ValueError("log is append-only in step order")
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def view_for(self, observers) -> list[dict]:
        observers = frozenset(observers)
        if not observers:
            return []
        return [e.view_for(observers) for e in self.entries]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.jsonl_record(), sort_keys=True, ensure_ascii=False) + "\n" for e in self.entries)


@dataclass(frozen=True)
class Receipt:
    step: int
    kind: Kind


class Network:
    """Lock-step network of participants ``0..n-1`` with a global step counter."""

    def __init__(self, n: int, log: ChannelLog | None = None):
        self.n = n
        self.log = log if log is not None else ChannelLog()
        self.step = self.log.entries[-1].step + 1 if self.log.entries else 0
        self.inboxes: dict[int, list[Message]] = {p: [] for p in range(n)}
        self.owner: dict[int, int] = {}
        self._next_handle = 0

    def _check(self, *pids):
        for p in pids:
            if not (isinstance(p, int) and 0 <= p < self.n):
                raise RoutingError(f"unknown participant {p!r}")

    def _append(self, **kw) -> Receipt:
        entry = LogEntry(step=self.step, **kw)
        self.log.append(entry)
        self.step += 1
        return Receipt(entry.step, entry.kind)

    def mtar_send(self, sender: int, payload: bytes, receiver: int, topic: str = "") -> Receipt:
        """Deliver ``payload`` to ``receiver`` only; nobody learns who sent it."""
        self._check(sender, receiver)
        self.inboxes[receiver].append(Message(payload, Kind.MTAR, topic, self.step))
        return self._append(kind=Kind.MTAR, topic=topic, payload=payload, sender=sender, receiver=receiver)

    def broadcast_anonymous(self, sender: int, payload: bytes, topic: str = "", readers=None) -> Receipt:
        """Deliver ``payload`` to everyone without revealing the sender."""
        self._check(sender)
        readers = None if readers is None else frozenset(readers)
        for p in range(self.n):
            self.inboxes[p].append(Message(payload, Kind.BROADCAST, topic, self.step))
        return self._append(kind=Kind.BROADCAST, topic=topic, payload=payload, sender=sender, readers=readers)

    def new_handle(self, holder: int) -> int:
        self._check(holder)
        h = self._next_handle
        self._next_handle += 1
        self.owner[h] = holder
        return h

    def qsend(self, sender: int, receiver: int, handle: int) -> Receipt:
        """Move a qubit handle over an authenticated channel; only metadata is logged."""
        self._check(sender, receiver)
        if self.owner.get(handle) != sender:
            raise OwnershipError(f"participant {sender} does not hold qubit {handle}")
        self.owner[handle] = receiver
        return self._append(kind=Kind.QSEND, topic="", payload=b"", sender=sender, receiver=receiver)

    def consume(self, holder: int, handle: int) -> None:
        """Destroy a handle after its qubit has been measured."""
        if self.owner.get(handle) != holder:
            raise OwnershipError(f"participant {holder} does not hold qubit {handle}")
        del self.owner[handle]

    def held_by(self, pid: int) -> list[int]:
        return sorted(h for h, o in self.owner.items() if o == pid)
