import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonqtx import adversary as adv
from anonqtx import protocol as proto
from anonqtx import qsim
from anonqtx.adversary import AdversaryStrategy, CollusionSpec, Kind
from anonqtx.protocol import (BellLabel, Mode, ProtocolConfig, RunStatus, Variant, collect_by_distributor,
                              run_protocol1, run_protocol2, run_protocol3)
from anonqtx.qsim import DualOutcome


def flip(prob=1.0, **kw):
    return AdversaryStrategy(kind=Kind.FLIP_OUTCOME, prob=prob, **kw)


# --- configuration -----------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(n=2), dict(m=0), dict(p=1.2), dict(theta=0.0), dict(theta=1.0), dict(sender_index=4),
    dict(sender_index=-1), dict(max_restarts=-1), dict(distill_variant="magic"), dict(seed=-3),
    dict(n=20), dict(variant="SIDEWAYS"),
])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        ProtocolConfig(**kw)


def test_config_defaults():
    cfg = ProtocolConfig(n=4)
    assert cfg.receiver == 3 and list(cfg.potential_senders) == [0, 1, 2]
    assert cfg.max_restarts == 16
    assert cfg.to_dict()["variant"] == "MTAS"


# --- parity repair -----------------------------------------------------------------

@pytest.mark.parametrize("outs,flipped", [([], False), ([0], False), ([1], True), ([1, 1], False), ([1, 0, 1, 1], True)])
def test_repair_parity_rule(outs, flipped):
    outs = [DualOutcome.from_bit(b) for b in outs]
    out = proto.repair_parity(outs, qsim.PHI_MINUS, 0)
    want = qsim.PHI_PLUS if flipped else qsim.PHI_MINUS
    assert qsim.fidelity(out, want) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_repair_restores_phi_plus_every_branch(n):
    # measure all but (first, last) of GHZ(n) on every branch, then repair
    for bits in np.ndindex(*(2,) * (n - 2)):
        st_ = qsim.make_ghz(n)
        outs = []
        for b in bits:
            _, st_ = qsim.project_dual(st_, 1, DualOutcome.from_bit(b))
            outs.append(DualOutcome.from_bit(b))
        fixed = proto.repair_parity(outs, st_, 0)
        assert qsim.fidelity(fixed, qsim.PHI_PLUS) == pytest.approx(1.0, abs=1e-9)


def test_parity_fault_hook(monkeypatch):
    monkeypatch.setattr(proto, "PARITY_FAULT", True)
    run = run_protocol2(ProtocolConfig(n=4, seed=1))
    assert all(pr.label is BellLabel.PHI_MINUS for pr in run.epr.pairs)


# --- Protocol 2 --------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 7])
@pytest.mark.parametrize("s", [0, 1])
def test_protocol2_honest(n, s):
    run = run_protocol2(ProtocolConfig(n=n, sender_index=s, seed=n * 10 + s))
    assert len(run.epr) == n - 1
    assert sorted(pr.distributor for pr in run.epr.pairs) == list(range(n - 1))
    for pr in run.epr.pairs:
        assert pr.label is BellLabel.PHI_PLUS
        assert pr.fidelity == pytest.approx(1.0, abs=1e-9)


def test_protocol2_message_pattern():
    run = run_protocol2(ProtocolConfig(n=5, seed=2))
    mtar = [e for e in run.log if e.kind.value == "MTAR"]
    # every potential sender talks to S once; S's dummy has the same length
    assert len(mtar) == 4 and {e.receiver for e in mtar} == {0}
    assert {len(e.payload) for e in mtar} == {4}


def test_protocol2_flip_breaks_pairs():
    col = CollusionSpec({1}, flip(1.0))
    run = run_protocol2(ProtocolConfig(n=4, seed=3), col)
    # P1 flips its report on honest distributors' states: those pairs get the wrong phase
    labels = {pr.distributor: pr.label for pr in run.epr.pairs}
    assert labels[0] is BellLabel.PHI_MINUS and labels[2] is BellLabel.PHI_MINUS
    assert labels[1] is BellLabel.PHI_PLUS


def test_collect_by_distributor_keeps_order():
    run = run_protocol3(ProtocolConfig(n=4, m=6, p=0.3, seed=4))
    buckets = collect_by_distributor(run.epr)
    assert sum(map(len, buckets.values())) == len(run.epr)
    for i, prs in buckets.items():
        assert all(pr.distributor == i for pr in prs)
        assert [pr.round for pr in prs] == sorted(pr.round for pr in prs)


# --- Protocol 3 --------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(3, 6), st.integers(1, 6), st.floats(0, 1), st.integers(0, 2**32))
def test_protocol3_honest_properties(n, m, p, seed):
    cfg = ProtocolConfig(n=n, m=m, p=p, seed=seed)
    run = run_protocol3(cfg)
    assert run.status is RunStatus.OK and run.restarts == 0 and not run.disagreements
    actual = sum(mode is Mode.ACTUAL for r in run.rounds for mode in r.modes.values())
    assert len(run.epr) == actual
    assert all(pr.label is BellLabel.PHI_PLUS for pr in run.epr.pairs)
    assert all(set(v) == set(range(n)) for v in run.coop_sets().values())


@pytest.mark.parametrize("p,expected", [(0.0, 12), (1.0, 0)])
def test_protocol3_mode_extremes(p, expected):
    assert len(run_protocol3(ProtocolConfig(n=4, m=4, p=p, seed=5)).epr) == expected


def test_protocol3_deterministic():
    cfg = ProtocolConfig(n=5, m=5, seed=77)
    col = CollusionSpec({2}, flip(0.4))
    a, b = run_protocol3(cfg, col), run_protocol3(cfg, col)
    assert json.dumps(a.to_document()) == json.dumps(b.to_document())
    assert a.log.to_jsonl() == b.log.to_jsonl()


def test_payload_lengths_do_not_depend_on_role():
    run = run_protocol3(ProtocolConfig(n=5, m=3, p=0.5, seed=6))
    by_topic = {}
    for e in run.log:
        if e.kind.value == "MTAR":
            by_topic.setdefault(e.topic, set()).add(len(e.payload))
    assert by_topic["mode"] == {1}
    assert by_topic["outcomes"] == by_topic["dummy"] == {4}


def test_receiver_is_never_pruned():
    col = CollusionSpec({1}, flip(1.0))
    run = run_protocol3(ProtocolConfig(n=4, m=3, p=1.0, seed=7), col)
    assert all(3 in v for v in run.coop_sets().values())


@pytest.mark.parametrize("seed", range(200))
def test_single_flip_on_trap_detected_and_pruned(seed):
    # forced trap mode, one flipped report on P0's trap: detected with certainty
    col = CollusionSpec({1}, flip(1.0, victims={0}, budget=1))
    run = run_protocol3(ProtocolConfig(n=4, m=2, p=1.0, seed=seed), col)
    assert run.rounds[0].disagreements == [(0, 1)]
    assert run.restarts == 1 and run.status is RunStatus.OK
    assert 1 not in run.coop_sets()[0]
    assert run.coop_sets()[2] == [0, 1, 2, 3]


def test_cooperation_sets_shrink_across_restarts():
    col = CollusionSpec({2, 3}, flip(0.3))
    run = run_protocol3(ProtocolConfig(n=6, m=2, p=1.0, seed=4), col)
    assert run.restarts >= 3 and run.status is RunStatus.OK
    hist = run.coop_history
    for before, after in zip(hist, hist[1:]):
        assert all(after[i] <= before[i] for i in before)
        assert any(after[i] < before[i] for i in before)
    # only corrupted participants are ever removed, and only by honest distributors
    for i in (0, 1, 4):
        assert set(range(6)) - hist[-1][i] <= {2, 3}
    assert hist[-1][2] == hist[-1][3] == frozenset(range(6))


def test_restart_limit():
    col = CollusionSpec({1}, flip(1.0, victims={0}, budget=1))
    run = run_protocol3(ProtocolConfig(n=4, m=2, p=1.0, max_restarts=0, seed=0), col)
    assert run.status is RunStatus.RESTART_LIMIT
    assert run.to_document()["status"] == "restart_limit"


def test_no_restart_keeps_going():
    col = CollusionSpec({1}, flip(1.0, victims={0}, budget=1))
    run = run_protocol3(ProtocolConfig(n=4, m=3, p=1.0, restart=False, seed=0), col)
    assert run.restarts == 0 and len(run.rounds) == 3
    assert 1 not in run.coop_sets()[0]


def test_disagreements_broadcast_every_round():
    run = run_protocol3(ProtocolConfig(n=4, m=5, seed=8))
    ann = [e for e in run.log if e.topic == "disagreements"]
    assert len(ann) == 5 and all(e.payload == b"[]" for e in ann)


def test_trap_guess_xi_zero_never_detected():
    s = AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=0.0)
    for seed in range(20):
        run = run_protocol3(ProtocolConfig(n=4, m=4, p=0.5, seed=seed), CollusionSpec({1}, s))
        assert not run.disagreements


def test_depolarize_damages_undetected_actual_pairs():
    s = AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=0.0)
    bad = total = 0
    for seed in range(60):
        run = run_protocol3(ProtocolConfig(n=3, m=4, p=0.0, seed=seed), CollusionSpec({1}, s))
        for pr in run.epr.pairs:
            if pr.distributor == 0:
                total += 1
                bad += pr.label is not BellLabel.PHI_PLUS
    # uniform Pauli leaves PHI+ with probability 1/4
    assert abs(bad / total - 0.75) < 0.1


def test_targeted_noise_hurts_only_the_target_as_sender():
    col = CollusionSpec({2}, AdversaryStrategy(kind=Kind.TARGETED_NOISE, target=0))
    errs = {0: 0, 1: 0}
    for s in (0, 1):
        for seed in range(40):
            run = run_protocol3(ProtocolConfig(n=4, m=4, p=0.0, sender_index=s, seed=seed), col)
            errs[s] += sum(pr.label is not BellLabel.PHI_PLUS for pr in run.epr.pairs if pr.distributor == 2)
    assert errs[1] == 0 and errs[0] > 40


# --- views and anonymity structure ---------------------------------------------------

def test_honest_views_identical_across_senders():
    for seed in range(30):
        runs = [run_protocol3(ProtocolConfig(n=5, m=4, p=0.4, sender_index=s, seed=seed)) for s in (0, 1, 2)]
        for c in ({0}, {1}, {2}, {3}):
            views = [r.view(CollusionSpec(c)) for r in runs if r.config.sender_index not in c]
            assert len({v.canonical() for v in views}) == 1


def test_view_monotone_in_collusion():
    run = run_protocol3(ProtocolConfig(n=5, m=3, seed=9))
    small = run.view(CollusionSpec({1}))
    big = run.view(CollusionSpec({1, 2}))
    assert adv.is_subview(small, big)
    assert run.view(CollusionSpec()).is_empty()


def test_receiver_view_hides_outcome_payloads():
    run = run_protocol3(ProtocolConfig(n=4, m=2, seed=10))
    for e in run.view(CollusionSpec({3})).log:
        if e["kind"] == "MTAR":
            assert "payload" not in e


# --- Protocol 1 --------------------------------------------------------------------

def _phi_pair():
    return run_protocol2(ProtocolConfig(n=3, seed=0)).epr.pairs[0]


@pytest.mark.parametrize("variant", list(Variant))
def test_teleport_random_inputs(variant):
    cfg = ProtocolConfig(n=3, variant=variant)
    rng = np.random.default_rng(11)
    pair = _phi_pair()
    for _ in range(25):
        msg = qsim.random_state(rng, 1)
        res = run_protocol1(cfg, msg, pair, rng)
        assert qsim.fidelity(res.received, msg) == pytest.approx(1.0, abs=1e-9)


def test_teleport_channels():
    pair = _phi_pair()
    msg = qsim.plus()
    a = run_protocol1(ProtocolConfig(n=3), msg, pair)
    b = run_protocol1(ProtocolConfig(n=3, variant="MTAR_INVERTED"), msg, pair)
    assert [e.kind.value for e in a.log] == ["BROADCAST"]
    assert [(e.kind.value, e.sender, e.receiver) for e in b.log] == [("MTAR", 2, 0)]


def test_teleport_over_wrong_pair_degrades():
    pair = _phi_pair()
    bad = proto.PairRecord(0, 0, 0, 0, 1, BellLabel.PSI_PLUS, 0.0, BellLabel.PSI_PLUS.state())
    rng = np.random.default_rng(12)
    basis = [qsim.basis_state("0"), qsim.basis_state("1"), qsim.plus(), qsim.minus()]
    f = [qsim.fidelity(run_protocol1(ProtocolConfig(n=3), m, bad, rng).received, m) for m in basis]
    assert np.mean(f) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        run_protocol1(ProtocolConfig(n=3), qsim.plus(), None)
    with pytest.raises(ValueError):
        run_protocol1(ProtocolConfig(n=3), qsim.make_ghz(2), pair)


def test_teleport_over_psi_plus_haar_average():
    # an X error on the output: Haar average of |<psi|X|psi>|^2 is 1/3
    bad = proto.PairRecord(0, 0, 0, 0, 1, BellLabel.PSI_PLUS, 0.0, BellLabel.PSI_PLUS.state())
    rng = np.random.default_rng(13)
    f = []
    for _ in range(4000):
        m = qsim.random_state(rng, 1)
        f.append(qsim.fidelity(run_protocol1(ProtocolConfig(n=3), m, bad, rng).received, m))
    assert abs(np.mean(f) - 1 / 3) < 4 * np.std(f) / np.sqrt(len(f))
