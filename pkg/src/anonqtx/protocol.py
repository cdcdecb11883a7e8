"""Protocol engines: teleportation (1), noisy EPR generation (2), trap-based EPR generation (3).

Participants are numbered ``0..n-1``. Potential senders are ``0..n-2`` and
the public receiver R is ``n-1``; ``sender_index`` picks which potential
sender is the real sender S.

Everything random in a round comes from :func:`anonqtx.rng.round_block`,
indexed by (distributor, participant) and never by role. Two runs with the
same seed and different senders therefore draw the same numbers for the
same events, which the anonymity analysis relies on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import adversary as adv
from . import distill as dst
from . import qsim
from .channels import ChannelLog, Network
from .qsim import BellLabel, DualOutcome, Statevector
from .rng import Slot, check_seed, round_block, stream

# Test hook: invert the parity repair rule (negative control for the verifier).
PARITY_FAULT = False


class Mode(str, Enum):
    ACTUAL = "actual"
    TRAP = "trap"


class Variant(str, Enum):
    MTAS = "MTAS"
    MTAR_INVERTED = "MTAR_INVERTED"


class Role(str, Enum):
    POTENTIAL_SENDER = "POTENTIAL_SENDER"
    SENDER = "SENDER"
    RECEIVER = "RECEIVER"


class RunStatus(str, Enum):
    OK = "ok"
    RESTART_LIMIT = "restart_limit"


DISTILL_VARIANTS = (None, "per_distributor", "combined", "reveal")


@dataclass
class ProtocolConfig:
    n: int = 5
    m: int = 10
    p: float = 0.25
    theta: float = 0.1
    sender_index: int = 0
    variant: Variant = Variant.MTAS
    max_restarts: int | None = None
    restart: bool = True
    distill_variant: str | None = None
    seed: int = 0
    max_qubits: int = qsim.MAX_QUBITS

    def __post_init__(self):
        self.variant = Variant(self.variant)
        self.seed = check_seed(self.seed)
        if not isinstance(self.n, int) or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")
        if self.n > self.max_qubits:
            raise ValueError(f"n={self.n} exceeds max_qubits={self.max_qubits}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must be in (0, 1), got {self.theta}")
        if not isinstance(self.sender_index, int) or not 0 <= self.sender_index < self.n - 1:
            raise ValueError(f"sender_index must be in [0, {self.n - 2}], got {self.sender_index!r}")
        if self.max_restarts is None:
            self.max_restarts = self.n * self.n
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.distill_variant not in DISTILL_VARIANTS:
            raise ValueError(f"distill_variant must be one of {DISTILL_VARIANTS}")

    @property
    def receiver(self) -> int:
        return self.n - 1

    @property
    def potential_senders(self) -> range:
        return range(self.n - 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "p": self.p, "theta": self.theta,
            "sender_index": self.sender_index, "variant": self.variant.value,
            "max_restarts": self.max_restarts, "restart": self.restart,
            "distill_variant": self.distill_variant, "seed": self.seed,
        }


@dataclass
class ParticipantState:
    id: int
    role: Role
    coop: set | None = None
    received: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)
    reported: dict = field(default_factory=dict)
    modes: dict = field(default_factory=dict)
    trap_record: list = field(default_factory=list)
    outbox: list = field(default_factory=list)
    inbox: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def record(self) -> dict:
        """JSON-able internal memory (what a corrupting adversary reads)."""
        return {
            "id": self.id,
            "role": self.role.value,
            "coop": None if self.coop is None else sorted(self.coop),
            "received": [list(r) for r in self.received],
            "outcomes": dict(self.outcomes),
            "reported": dict(self.reported),
            "modes": dict(self.modes),
            "trap_record": list(self.trap_record),
            "outbox": list(self.outbox),
            "inbox": list(self.inbox),
            "notes": dict(self.notes),
        }


@dataclass
class PairRecord:
    distributor: int
    attempt: int
    round: int
    sender_handle: int
    receiver_handle: int
    label: BellLabel
    fidelity: float
    state: Statevector = field(repr=False, compare=False)  # god view; sender side is qubit 0

    def to_dict(self) -> dict:
        return {
            "distributor": self.distributor, "attempt": self.attempt, "round": self.round,
            "sender_handle": self.sender_handle, "receiver_handle": self.receiver_handle,
            "label": self.label.value, "fidelity": round(self.fidelity, 12),
        }


@dataclass
class EPRResult:
    pairs: list = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def labels(self) -> list:
        return [pr.label for pr in self.pairs]


def collect_by_distributor(result: EPRResult) -> dict[int, list[PairRecord]]:
    """Pairs grouped by who created the underlying GHZ state, in original order."""
    buckets: dict[int, list[PairRecord]] = {}
    for pr in result.pairs:
        buckets.setdefault(pr.distributor, []).append(pr)
    return buckets


@dataclass
class RoundRecord:
    attempt: int
    round: int
    modes: dict
    disagreements: list
    pairs: list

    def to_dict(self) -> dict:
        return {
            "attempt": self.attempt, "round": self.round,
            "modes": {str(k): v.value for k, v in sorted(self.modes.items())},
            "disagreements": [list(d) for d in self.disagreements],
            "pairs": [list(p) for p in self.pairs],
        }


@dataclass
class ProtocolRun:
    protocol: int
    config: ProtocolConfig
    collusion: adv.CollusionSpec
    epr: EPRResult
    rounds: list
    log: ChannelLog
    participants: dict
    status: RunStatus = RunStatus.OK
    restarts: int = 0
    touched: set = field(default_factory=set)
    distill: dst.DistillReport | None = None
    coop_history: list = field(default_factory=list)  # cooperation sets at the start of each attempt

    def view(self, collusion: adv.CollusionSpec | None = None) -> adv.AdversaryView:
        return adv.build_view(self.log, self.participants, collusion or self.collusion)

    @property
    def disagreements(self) -> list:
        return [d for r in self.rounds for d in r.disagreements]

    def coop_sets(self) -> dict:
        return {i: sorted(self.participants[i].coop) for i in self.config.potential_senders}

    def to_document(self) -> dict:
        doc = {
            "protocol": self.protocol,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "adversary": self.collusion.to_dict(),
            "status": self.status.value,
            "restarts": self.restarts,
            "rounds": [r.to_dict() for r in self.rounds],
            "pairs": [p.to_dict() for p in self.epr.pairs],
            "num_pairs": len(self.epr),
            "cooperation_sets": {str(k): v for k, v in self.coop_sets().items()},
            "channel_log": "channel_log.jsonl",
        }
        if self.distill is not None:
            doc["distill"] = self.distill.to_dict()
        return doc


# --- quantum bookkeeping -------------------------------------------------------

class _Register:
    __slots__ = ("state", "handles")

    def __init__(self, state: Statevector, handles: list):
        self.state = state
        self.handles = handles


class _Lab:
    """God-view store mapping qubit handles to the register that holds them."""

    def __init__(self):
        self.where: dict[int, _Register] = {}

    def add(self, state: Statevector, handles: list) -> _Register:
        reg = _Register(state, list(handles))
        for h in handles:
            self.where[h] = reg
        return reg

    def pauli(self, h: int, which: str) -> None:
        reg = self.where[h]
        reg.state = qsim.apply_pauli(reg.state, reg.handles.index(h), which)

    def measure_dual(self, h: int, u: float) -> DualOutcome:
        reg = self.where.pop(h)
        pos = reg.handles.index(h)
        outcome, rest = qsim.measure_dual(reg.state, pos, u=u)
        reg.handles.pop(pos)
        reg.state = rest
        return outcome

    def pair_state(self, hs: int, hr: int) -> Statevector:
        reg = self.where[hs]
        if reg.state.num_qubits != 2 or set(reg.handles) != {hs, hr}:
            raise RuntimeError("pair register does not hold exactly the sender and receiver qubits")
        st = reg.state
        if reg.handles[0] != hs:
            st = Statevector(st.tensor().T.reshape(-1), check=False)
        return st

    def drop(self, h: int) -> None:
        self.where.pop(h, None)


def parity(outcomes) -> int:
    """XOR of the outcomes (MINUS counts 1)."""
    return sum(o.bit for o in outcomes) & 1


def repair_parity(outcomes, state: Statevector, qubit: int) -> Statevector:
    """Apply Z to ``qubit`` iff the number of MINUS outcomes is odd.

    The sender's own slot is never passed in (it is formally zero).
    """
    flip = parity(outcomes) ^ int(PARITY_FAULT)
    return qsim.apply_pauli(state, qubit, "Z") if flip else state


def _key(attempt: int, rnd: int, i: int) -> str:
    return f"a{attempt}r{rnd}d{i}"


_PAULIS = (None, "X", "Y", "Z")


class _Engine:
    def __init__(self, config: ProtocolConfig, collusion: adv.CollusionSpec | None, protocol: int):
        self.cfg = config
        self.col = collusion or adv.HONEST
        self.col.validate(config.n, config.sender_index)
        self.protocol = protocol
        self.S = config.sender_index
        self.R = config.receiver
        self.ps = list(config.potential_senders)
        self.net = Network(config.n)
        self.lab = _Lab()
        self.touched: set = set()
        self.disruptions = {c: 0 for c in self.col.corrupted}
        self.parts = {}
        for p in range(config.n):
            role = Role.RECEIVER if p == self.R else (Role.SENDER if p == self.S else Role.POTENTIAL_SENDER)
            coop = set(range(config.n)) if p != self.R else None
            self.parts[p] = ParticipantState(p, role, coop)

    @property
    def strategy(self) -> adv.AdversaryStrategy:
        return self.col.strategy

    def corrupted(self, p: int) -> bool:
        return p in self.col.corrupted

    # -- messaging helpers (mirror messages into participant memories) --

    def _mtar(self, sender, payload: bytes, receiver, topic):
        rc = self.net.mtar_send(sender, payload, receiver, topic)
        self.parts[sender].outbox.append([rc.step, "MTAR", topic, payload.decode()])
        self.parts[receiver].inbox.append([rc.step, "MTAR", topic, payload.decode()])

    def _broadcast(self, sender, payload: bytes, topic, readers=None):
        rc = self.net.broadcast_anonymous(sender, payload, topic, readers)
        self.parts[sender].outbox.append([rc.step, "BROADCAST", topic, payload.decode()])

    # -- distribution --

    def _send_all(self, i: int, members: list, state: Statevector, order: list, attempt: int, rnd: int) -> dict:
        """Create handles for ``order`` (qubit k of ``state`` goes to order[k]) and ship them."""
        handles = {j: self.net.new_handle(i) for j in members}
        self.lab.add(state, [handles[j] for j in order])
        for j in members:
            if j != i:
                self.net.qsend(i, j, handles[j])
            self.parts[j].received.append([attempt, rnd, i, handles[j]])
        return handles

    def _distribute_actual(self, i, members, U, attempt, rnd) -> dict:
        st = self.strategy
        if self.corrupted(i) and st.kind is adv.Kind.PRODUCT_DISTRIBUTOR:
            self.touched.add((attempt, rnd, i))
            bits = [DualOutcome.from_bit(U[Slot.PRODUCT, i, j] < 0.5) for j in members]
            state = qsim.tensor(*(qsim.dual_state(b) for b in bits), max_qubits=self.cfg.max_qubits)
            return self._send_all(i, members, state, members, attempt, rnd)
        if (self.corrupted(i) and st.kind is adv.Kind.TARGETED_NOISE
                and st.target in members and st.target != i and len(members) > 2):
            # the target gets an unentangled |+>; everyone else shares a GHZ state
            self.touched.add((attempt, rnd, i))
            others = [j for j in members if j != st.target]
            state = qsim.tensor(qsim.make_ghz(len(others), self.cfg.max_qubits), qsim.plus(),
                                max_qubits=self.cfg.max_qubits)
            return self._send_all(i, members, state, others + [st.target], attempt, rnd)
        state = qsim.make_ghz(len(members), self.cfg.max_qubits)
        return self._send_all(i, members, state, members, attempt, rnd)

    def _distribute_trap(self, i, members, U, attempt, rnd):
        bits = {j: DualOutcome.from_bit(U[Slot.TRAP, i, j] < 0.5) for j in members}
        state = qsim.tensor(*(qsim.dual_state(bits[j]) for j in members), max_qubits=self.cfg.max_qubits)
        self.parts[i].trap_record.append({
            "key": _key(attempt, rnd, i),
            "states": {str(j): ("-" if bits[j].bit else "+") for j in members},
        })
        return self._send_all(i, members, state, members, attempt, rnd), bits

    # -- measurement --

    def _measure(self, j, i, h, U, attempt, rnd, trap_state, depolarized) -> tuple[DualOutcome, DualOutcome]:
        """Participant ``j`` measures the system ``h`` received from ``i``; returns (true, reported)."""
        disrupting = False
        if self.corrupted(j):
            disrupting = adv.disrupts(self.strategy, self.col, i, self.disruptions[j])
            if disrupting:
                self.disruptions[j] += 1
                self.touched.add((attempt, rnd, i))
                action = adv.pre_measure_action(self.strategy, True)
                if action == "Z":
                    self.lab.pauli(h, "Z")
                elif action == "DEPOLARIZE" and trap_state is None:
                    depolarized.add(i)
        true = self.lab.measure_dual(h, U[Slot.MEASURE, i, j])
        self.net.consume(j, h)
        reported = true
        if self.corrupted(j):
            ctx = adv.ReportContext(i, trap_state is not None, trap_state, disrupting)
            reported = adv.act_on_report(self.strategy, true, ctx, U[Slot.ADVERSARY, i, j])
            if reported is not true:
                self.touched.add((attempt, rnd, i))
        k = _key(attempt, rnd, i)
        self.parts[j].outcomes[k] = true.bit
        self.parts[j].reported[k] = reported.bit
        return true, reported

    def _outcome_payload(self, reports: dict) -> bytes:
        return bytes("".join("." if i not in reports else ("-" if reports[i].bit else "+") for i in self.ps), "ascii")

    def _dummy_payload(self, U) -> bytes:
        bit = "1" if U[Slot.DUMMY, self.S, 0] < 0.5 else "0"
        return bytes(bit + "." * (len(self.ps) - 1), "ascii")

    # -- pair classification --

    def _classify(self, i, handles, U, attempt, rnd, reports, depolarized) -> PairRecord:
        hs, hr = handles[self.S], handles[self.R]
        others = [reports[j][i] for j in sorted(handles) if j not in (self.S, self.R)]
        reg = self.lab.where[hs]
        reg.state = repair_parity(others, reg.state, reg.handles.index(hs))
        st = self.lab.pair_state(hs, hr)
        if i in depolarized:
            pauli = _PAULIS[min(int(U[Slot.PAULI, i, 0] * 4), 3)]
            if pauli:
                st = qsim.apply_pauli(st, 0, pauli)
        probs = qsim.bell_probabilities(st, 0, 1)
        u = U[Slot.LABEL, i, 0]
        acc = 0.0
        bits = None
        for b in qsim.BELL_ORDER:
            if probs[b] <= 0:
                continue
            bits = b
            acc += probs[b]
            if u < acc:
                break
        label = BellLabel.from_bits(*bits)
        self.lab.drop(hs)
        self.lab.drop(hr)
        return PairRecord(i, attempt, rnd, hs, hr, label, probs[(0, 0)], label.state())

    # -- Protocol 2 --

    def run2(self) -> ProtocolRun:
        cfg = self.cfg
        U = round_block(cfg.seed, cfg.n, 0, 0, protocol=2)
        members = list(range(cfg.n))
        dist = {}
        for i in self.ps:
            self.parts[i].modes["a0r0"] = Mode.ACTUAL.value
            dist[i] = self._distribute_actual(i, members, U, 0, 0)
        reports: dict[int, dict] = {}
        depolarized: set = set()
        for j in self.ps:
            if j == self.S:
                continue
            reports[j] = {i: self._measure(j, i, dist[i][j], U, 0, 0, None, depolarized)[1] for i in self.ps}
        for j in self.ps:
            if j == self.S:
                self._mtar(j, self._dummy_payload(U), self.S, "dummy")
            else:
                self._mtar(j, self._outcome_payload(reports[j]), self.S, "outcomes")
        self.parts[self.S].notes["reports"] = {
            str(j): {str(i): o.bit for i, o in r.items()} for j, r in sorted(reports.items())
        }
        pairs = [self._classify(i, dist[i], U, 0, 0, reports, depolarized) for i in self.ps]
        rec = RoundRecord(0, 0, {i: Mode.ACTUAL for i in self.ps}, [],
                          [(pr.distributor, pr.sender_handle, pr.receiver_handle) for pr in pairs])
        return ProtocolRun(2, cfg, self.col, EPRResult(pairs), [rec], self.net.log, self.parts,
                           touched=self.touched)

    # -- Protocol 3 --

    def _round3(self, attempt: int, rnd: int) -> tuple[RoundRecord, list]:
        cfg, S, R = self.cfg, self.S, self.R
        U = round_block(cfg.seed, cfg.n, attempt, rnd, protocol=3)
        key = f"a{attempt}r{rnd}"
        modes = {i: (Mode.TRAP if U[Slot.MODE, i, 0] < cfg.p else Mode.ACTUAL) for i in self.ps}
        # mode reports to S
        for i in self.ps:
            self.parts[i].modes[key] = modes[i].value
            self._mtar(i, b"T" if modes[i] is Mode.TRAP else b"A", S, "mode")
        # distribution
        dist, traps = {}, {}
        for i in self.ps:
            members = sorted(self.parts[i].coop)
            if modes[i] is Mode.TRAP:
                dist[i], traps[i] = self._distribute_trap(i, members, U, attempt, rnd)
            else:
                dist[i] = self._distribute_actual(i, members, U, attempt, rnd)
        # non-senders measure everything they hold and report to S
        reports: dict[int, dict] = {}
        depolarized: set = set()
        for j in self.ps:
            if j == S:
                continue
            reports[j] = {}
            for i in self.ps:
                if j in dist[i]:
                    trap_state = traps[i][j] if i in traps else None
                    reports[j][i] = self._measure(j, i, dist[i][j], U, attempt, rnd, trap_state, depolarized)[1]
        for j in self.ps:
            if j == S:
                self._mtar(j, self._dummy_payload(U), S, "dummy")
            else:
                self._mtar(j, self._outcome_payload(reports[j]), S, "outcomes")
        # S measures the systems reported as traps
        own = {}
        for i in self.ps:
            if modes[i] is Mode.TRAP and S in dist[i]:
                h = dist[i][S]
                own[i] = self.lab.measure_dual(h, U[Slot.MEASURE, i, S])
                self.net.consume(S, h)
                self.parts[S].outcomes[_key(attempt, rnd, i)] = own[i].bit
        # trap lists to S
        for i in self.ps:
            if modes[i] is Mode.TRAP:
                listing = "".join(
                    "." if j not in traps[i] else ("-" if traps[i][j].bit else "+") for j in range(cfg.n))
                self._mtar(i, listing.encode(), S, "traps")
        # S compares and announces every disagreement
        disagreements = []
        for i in self.ps:
            if modes[i] is not Mode.TRAP:
                continue
            for j in sorted(traps[i]):
                if j == R:
                    continue
                got = own[i] if j == S else reports[j][i]
                if got is not traps[i][j]:
                    disagreements.append((i, j))
        self._broadcast(S, json.dumps([list(d) for d in disagreements]).encode(), "disagreements")
        for d in disagreements:
            self.parts[S].notes.setdefault("announced", []).append([attempt, rnd, *d])
        pairs = []
        if not disagreements or not cfg.restart:
            for i in self.ps:
                if modes[i] is Mode.ACTUAL and S in dist[i]:
                    pairs.append(self._classify(i, dist[i], U, attempt, rnd, reports, depolarized))
        for i in self.ps:
            for h in dist[i].values():
                self.lab.drop(h)
        rec = RoundRecord(attempt, rnd, modes, disagreements,
                          [(pr.distributor, pr.sender_handle, pr.receiver_handle) for pr in pairs])
        return rec, pairs

    def run3(self) -> ProtocolRun:
        cfg = self.cfg
        rounds, pairs = [], []
        attempt = restarts = 0
        status = RunStatus.OK
        history = []
        while True:
            history.append({i: frozenset(self.parts[i].coop) for i in self.ps})
            pairs = []
            aborted = False
            for rnd in range(cfg.m):
                rec, got = self._round3(attempt, rnd)
                rounds.append(rec)
                pairs.extend(got)
                if rec.disagreements:
                    for i, j in rec.disagreements:
                        self.parts[i].coop.discard(j)
                    if cfg.restart:
                        aborted = True
                        break
            if not aborted:
                break
            restarts += 1
            if restarts > cfg.max_restarts:
                status = RunStatus.RESTART_LIMIT
                break
            attempt += 1
        run = ProtocolRun(3, cfg, self.col, EPRResult(pairs), rounds, self.net.log, self.parts,
                          status=status, restarts=restarts, touched=self.touched, coop_history=history)
        if status is RunStatus.OK and cfg.distill_variant:
            run.distill = self._distill(run.epr)
        return run

    def _distill(self, epr: EPRResult) -> dst.DistillReport:
        cfg, S, R = self.cfg, self.S, self.R
        rng = stream(cfg.seed, "distill")
        reveal = cfg.distill_variant == "reveal"
        report = dst.per_distributor_distill(epr, cfg.theta, rng, reveal=reveal)
        for i, outcome in sorted(report.outcomes.items()):
            payload = json.dumps({"distributor": i, "transcript": outcome.transcript}, sort_keys=True)
            self._mtar(R, payload.encode(), S, "distill")
        self.parts[S].notes["acceptance"] = {str(k): v for k, v in report.acceptance().items()}
        if cfg.distill_variant == "combined":
            report.combined = dst.combined_distill(epr, cfg.theta, rng)
        if reveal:
            payload = json.dumps({str(k): v for k, v in report.acceptance().items()}, sort_keys=True)
            self._broadcast(S, payload.encode(), "acceptance", readers={R})
            self.parts[R].notes["acceptance"] = json.loads(payload)
        return report


def run_protocol2(config: ProtocolConfig, adversary_spec: adv.CollusionSpec | None = None) -> ProtocolRun:
    """Every potential sender distributes one GHZ(n) state; S repairs the pairs it shares with R."""
    return _Engine(config, adversary_spec, 2).run2()


def run_protocol3(config: ProtocolConfig, adversary_spec: adv.CollusionSpec | None = None) -> ProtocolRun:
    """Trap-based anonymous EPR generation with cooperation-set pruning and restarts."""
    return _Engine(config, adversary_spec, 3).run3()


# --- Protocol 1 ------------------------------------------------------------------

@dataclass
class TeleportResult:
    received: Statevector
    outcome: qsim.BellOutcome
    log: ChannelLog


def run_protocol1(config: ProtocolConfig, message_state: Statevector, pair: PairRecord | None,
                  rng: np.random.Generator | None = None, network: Network | None = None) -> TeleportResult:
    """Teleport a one-qubit message over a shared pair.

    MTAS: the anonymous sender Bell-measures (message, its half) and
    broadcasts the two bits anonymously; R corrects with X^bx then Z^bz.
    MTAR_INVERTED: R holds the message, measures (message, its half) and
    sends the bits by MTAR to the anonymous holder of the other half.
    """
    if pair is None:
        raise ValueError("no shared pair available")
    if message_state.num_qubits != 1:
        raise ValueError("message must be a single qubit")
    rng = rng if rng is not None else stream(config.seed, "protocol1")
    net = network if network is not None else Network(config.n)
    S, R = config.sender_index, config.receiver
    if config.variant is Variant.MTAS:
        # qubits: 0 message, 1 sender half, 2 receiver half
        joint = qsim.tensor(message_state, pair.state)
        outcome, rest = qsim.bell_measure(joint, 0, 1, rng)
        net.broadcast_anonymous(S, f"{outcome.bx}{outcome.bz}".encode(), "teleport")
    else:
        # qubits: 0 message, 1 receiver half, 2 sender half
        swapped = Statevector(pair.state.tensor().T.reshape(-1), check=False)
        joint = qsim.tensor(message_state, swapped)
        outcome, rest = qsim.bell_measure(joint, 0, 1, rng)
        net.mtar_send(R, f"{outcome.bx}{outcome.bz}".encode(), S, "teleport")
    if outcome.bx:
        rest = qsim.apply_pauli(rest, 0, "X")
    if outcome.bz:
        rest = qsim.apply_pauli(rest, 0, "Z")
    return TeleportResult(rest, outcome, net.log)
