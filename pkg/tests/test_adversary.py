import pytest
from hypothesis import given, strategies as st

from anonqtx import adversary as adv
from anonqtx.adversary import AdversaryStrategy, CollusionSpec, Kind, ReportContext
from anonqtx.qsim import DualOutcome

PLUS, MINUS = DualOutcome.PLUS, DualOutcome.MINUS


def test_strategy_validation():
    with pytest.raises(ValueError):
        AdversaryStrategy(kind=Kind.FLIP_OUTCOME, prob=1.5)
    with pytest.raises(ValueError):
        AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=-0.1)
    with pytest.raises(ValueError):
        AdversaryStrategy(kind=Kind.TARGETED_NOISE)
    with pytest.raises(ValueError):
        AdversaryStrategy(kind="NOT_A_KIND")
    with pytest.raises(ValueError):
        AdversaryStrategy(kind=Kind.TRAP_GUESS, budget=-1)


strategies = st.one_of(
    st.just(AdversaryStrategy()),
    st.builds(AdversaryStrategy, kind=st.just(Kind.FLIP_OUTCOME), prob=st.floats(0, 1)),
    st.builds(AdversaryStrategy, kind=st.just(Kind.TRAP_GUESS), xi=st.floats(0, 1),
              disrupt_action=st.sampled_from(list(adv.Disrupt)),
              victims=st.none() | st.frozensets(st.integers(0, 5)), budget=st.none() | st.integers(0, 9)),
    st.builds(AdversaryStrategy, kind=st.just(Kind.TARGETED_NOISE), target=st.integers(0, 5)),
)


@given(strategies, st.frozensets(st.integers(0, 5)))
def test_roundtrip(strategy, corrupted):
    spec = CollusionSpec(corrupted, strategy)
    assert CollusionSpec.from_dict(spec.to_dict()) == spec


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        CollusionSpec.from_dict({"corrupted": [1], "bogus": 1})
    with pytest.raises(ValueError):
        AdversaryStrategy.from_dict({"kind": "PASSIVE", "bogus": 1})
    assert CollusionSpec.from_dict(None) == adv.HONEST


def test_validate_sender_not_corrupted():
    with pytest.raises(ValueError):
        CollusionSpec({0}).validate(5, 0)
    with pytest.raises(ValueError):
        CollusionSpec({7}).validate(5, 0)
    CollusionSpec({1, 4}).validate(5, 0)


def test_flip_outcome_needs_disrupting_context():
    s = AdversaryStrategy(kind=Kind.FLIP_OUTCOME, prob=1.0)
    on = ReportContext(0, False, None, True)
    off = ReportContext(0, False, None, False)
    assert adv.act_on_report(s, PLUS, on, 0.3) is MINUS
    assert adv.act_on_report(s, PLUS, off, 0.3) is PLUS


@pytest.mark.parametrize("u,expected", [(0.1, MINUS), (0.9, PLUS)])
def test_trap_guess_oracle(u, expected):
    s = AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=0.5)
    ctx = ReportContext(0, True, PLUS, True)
    # answer is about the trap state, not whatever was measured
    assert adv.act_on_report(s, MINUS, ctx, u) is expected


def test_trap_guess_actual_mode_reports_measurement():
    s = AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=1.0)
    assert adv.act_on_report(s, MINUS, ReportContext(0, False, None, True), 0.0) is MINUS


def test_disrupts_gating():
    s = AdversaryStrategy(kind=Kind.TRAP_GUESS, xi=0.5, victims={0}, budget=2)
    col = CollusionSpec({1, 2}, s)
    assert adv.disrupts(s, col, 0, 0)
    assert adv.disrupts(s, col, 0, 1)
    assert not adv.disrupts(s, col, 0, 2)      # budget spent
    assert not adv.disrupts(s, col, 3, 0)      # not a victim
    assert not adv.disrupts(s, col, 2, 0)      # own collusion
    assert not adv.disrupts(adv.PASSIVE, col, 0, 0)


def test_pre_measure_action():
    tg = AdversaryStrategy(kind=Kind.TRAP_GUESS)
    pf = AdversaryStrategy(kind=Kind.TRAP_GUESS, disrupt_action=adv.Disrupt.PHASE_FLIP)
    assert adv.pre_measure_action(tg, True) == "DEPOLARIZE"
    assert adv.pre_measure_action(pf, True) == "Z"
    assert adv.pre_measure_action(pf, False) is None
    assert adv.pre_measure_action(AdversaryStrategy(kind=Kind.FLIP_OUTCOME), True) is None


def _view(corrupted, records, log):
    return adv.AdversaryView(tuple(corrupted), records, log)


def test_subview():
    big = _view([1, 2], {"1": {"a": 1}, "2": {"b": 2}}, [{"step": 0, "payload": "x"}, {"step": 1}])
    small = _view([1], {"1": {"a": 1}}, [{"step": 0}, {"step": 1}])
    assert adv.is_subview(small, big)
    assert not adv.is_subview(big, small)
    assert adv.is_subview(_view([], {}, []), big)
    assert _view([], {}, []).is_empty()


def test_canonical_is_order_independent():
    a = _view([1], {"1": {"x": 1, "y": 2}}, [])
    b = _view([1], {"1": {"y": 2, "x": 1}}, [])
    assert a.canonical() == b.canonical()
