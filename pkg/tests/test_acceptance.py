"""Acceptance battery: one test per criterion, each recording a PASS/FAIL line.

All seeds are fixed here, before looking at any result. Runtime limits are
part of each criterion and are checked alongside the numbers.
"""
import itertools
import time

import numpy as np

from anonqtx import analysis as an
from anonqtx import distill as dst
from anonqtx import protocol as proto
from anonqtx import qsim
from anonqtx.adversary import AdversaryStrategy, CollusionSpec, Kind
from anonqtx.protocol import BellLabel, ProtocolConfig, RunStatus
from anonqtx.qsim import DualOutcome

SEED = 2024


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_c01_ghz_parity_law(record):
    worst, branches = 0.0, 0
    with Timer() as t:
        for n in range(3, 11):
            ghz = qsim.make_ghz(n)
            for bits in itertools.product((0, 1), repeat=n - 2):
                st = ghz
                outs = [DualOutcome.from_bit(b) for b in bits]
                for o in outs:
                    # qubit 1 is always the next unmeasured middle qubit
                    _, st = qsim.project_dual(st, 1, o)
                st = proto.repair_parity(outs, st, 0)
                worst = max(worst, 1 - qsim.fidelity(st, qsim.PHI_PLUS))
                branches += 1
    ok = worst <= 1e-9 and t.seconds < 10
    assert record(1, ok, f"{branches} branches n=3..10, max 1-F = {worst:.1e}", t.seconds)


def test_c02_protocol2_honest(record):
    with Timer() as t:
        run = proto.run_protocol2(ProtocolConfig(n=5, seed=SEED))
    fids = [pr.fidelity for pr in run.epr.pairs]
    ok = len(fids) == 4 and min(fids) >= 1 - 1e-9 and t.seconds < 1
    assert record(2, ok, f"{len(fids)} pairs, min fidelity {min(fids):.12f}", t.seconds)


def test_c03_teleportation(record):
    rng = np.random.default_rng(SEED)
    pair = proto.run_protocol2(ProtocolConfig(n=3, seed=SEED)).epr.pairs[0]
    worst = {}
    with Timer() as t:
        for variant in proto.Variant:
            cfg = ProtocolConfig(n=3, variant=variant)
            fids = []
            for _ in range(100):
                msg = qsim.random_state(rng, 1)
                fids.append(qsim.fidelity(proto.run_protocol1(cfg, msg, pair, rng).received, msg))
            worst[variant.value] = min(fids)
    ok = min(worst.values()) >= 1 - 1e-9 and t.seconds < 5
    assert record(3, ok, "min fidelity " + ", ".join(f"{k} {v:.12f}" for k, v in worst.items()), t.seconds)


def test_c04_detection_bound(record):
    with Timer() as t:
        head = an.monte_carlo_detection(
            an.DetectionExperiment(p=0.25, xi=0.5, trials=10_000, disruptions_per_trial=15), SEED)
        grid = []
        for i, (p, xi, k) in enumerate(itertools.product((0.1, 0.25, 0.5), (0.1, 0.25, 0.5), (1, 5, 15))):
            r = an.monte_carlo_detection(an.DetectionExperiment(p=p, xi=xi, trials=2000, disruptions_per_trial=k),
                                         SEED + 1 + i)
            grid.append(((p, xi, k), r))
    bad = [key for key, r in grid if not r.within(3.0)]
    worst = max(abs(r.rate - r.expected) / r.sigma for _, r in grid)
    ok = head.within(3.0) and not bad and t.seconds < 120
    detail = (f"headline {head.rate:.4f} vs {head.expected:.4f} "
              f"({abs(head.rate - head.expected) / head.sigma:.2f} sigma, 10^4 trials); "
              f"grid {27 - len(bad)}/27 within 3 sigma at 2000 trials, worst {worst:.2f} sigma")
    assert record(4, ok, detail + (f"; outside: {bad}" if bad else ""), t.seconds)


def test_c05_min_rounds_adjoint(record):
    rng = np.random.default_rng(SEED)
    good = 0
    with Timer() as t:
        for _ in range(50):
            p, xi, theta = rng.uniform(0.05, 0.95, 3)
            target = rng.uniform(1e-4, 0.9)
            m = an.min_rounds(p, xi, theta, target)
            good += an.detection_bound(p, xi, theta, m) <= target < an.detection_bound(p, xi, theta, m - 1) \
                if m > 1 else an.detection_bound(p, xi, theta, m) <= target
    ok = good == 50 and t.seconds < 1
    assert record(5, ok, f"{good}/50 points satisfy bound(m) <= target < bound(m-1)", t.seconds)


def test_c06_anonymity_honest(record):
    cfg = ProtocolConfig(n=5, m=10, p=0.25, theta=0.1, sender_index=0)
    with Timer() as t:
        rep = an.anonymity_test(cfg, CollusionSpec({2}), 10_000, SEED, alt_sender=1)
    ok = rep.tv_estimate <= 0.05 and t.seconds < 300
    detail = (f"TV {rep.tv_estimate:.4f} over {rep.trials} paired trials, full-view mismatch "
              f"{rep.mismatch_rate:.4f}, coarse support {rep.support}")
    assert record(6, ok, detail, t.seconds)


def test_c07_reveal_attack(record):
    cfg = ProtocolConfig(n=5, m=10, p=0.25, theta=0.1, sender_index=0, distill_variant="reveal")
    col = CollusionSpec({3, 4}, AdversaryStrategy(kind=Kind.TARGETED_NOISE, target=0))
    with Timer() as t:
        rep = an.anonymity_test(cfg, col, 2000, SEED, alt_sender=1)
    ok = rep.tv_estimate >= 0.3 and t.seconds < 300
    assert record(7, ok, f"TV {rep.tv_estimate:.4f} over {rep.trials} paired trials (s=0 vs s'=1, C={{3,4}})",
                  t.seconds)


def test_c08_trap_detection(record):
    flip = AdversaryStrategy(kind=Kind.FLIP_OUTCOME, prob=1.0, victims={0}, budget=1)
    detected = 0
    with Timer() as t:
        for seed in range(SEED, SEED + 100):
            run = proto.run_protocol3(ProtocolConfig(n=4, m=2, p=1.0, seed=seed), CollusionSpec({1}, flip))
            detected += run.rounds[0].disagreements == [(0, 1)] and 1 not in run.coop_sets()[0]
        # several corrupted flippers: pruning happens over successive restarts
        col = CollusionSpec({2, 3}, AdversaryStrategy(kind=Kind.FLIP_OUTCOME, prob=0.3))
        run = proto.run_protocol3(ProtocolConfig(n=6, m=2, p=1.0, seed=4), col)
    hist = run.coop_history
    monotone = all(all(b[i] <= a[i] for i in a) and any(b[i] < a[i] for i in a) for a, b in zip(hist, hist[1:]))
    ok = detected == 100 and run.restarts >= 3 and monotone and run.status is RunStatus.OK and t.seconds < 1
    sizes = [sum(map(len, h.values())) for h in hist]
    detail = f"single flip detected and pruned {detected}/100; {run.restarts} restarts, total coop size {sizes}"
    assert record(8, ok, detail, t.seconds)


def test_c09_lemma1(record):
    with Timer() as t:
        reps = an.lemma1_check(3, 1, grid=21)
        reps2 = an.lemma1_check(5, 2, grid=21)
    comp, dual = reps[0], reps[-1]
    ok = (abs(dual.distinguish_prob - 1) <= 1e-9 and dual.collapse_distance <= 1e-9
          and abs(reps2[-1].distinguish_prob - 1) <= 1e-9 and reps2[-1].collapse_distance <= 1e-9
          and abs(comp.distinguish_prob - 0.5) <= 1e-12
          and an.tradeoff_is_monotone(reps) and an.tradeoff_is_monotone(reps2) and t.seconds < 60)
    detail = (f"dual: distinguish {dual.distinguish_prob:.12f}, distance {dual.collapse_distance:.1e}; "
              f"computational: distinguish {comp.distinguish_prob:.12f}, distance {comp.collapse_distance:.4f}; "
              f"monotone envelope over 21 angles")
    assert record(9, ok, detail, t.seconds)


def test_c10_distillation_contracts(record):
    good, bad = BellLabel.PHI_PLUS, BellLabel.PSI_MINUS
    rng = np.random.default_rng(SEED)
    with Timer() as t:
        at = dst.one_way_distill([bad] * 2 + [good] * 18, 0.1, rng)
        below = dst.one_way_distill([bad] + [good] * 19, 0.1, rng)
        one_way = all(m["direction"] == dst.R_TO_S for o in (at, below) for m in o.transcript)
        col = CollusionSpec({3}, AdversaryStrategy(kind=Kind.TARGETED_NOISE, target=0))
        blind = differs = 0
        for seed in range(SEED, SEED + 10):
            cfg = dict(n=5, m=10, p=0.25, theta=0.1, distill_variant="per_distributor", seed=seed)
            hurt = proto.run_protocol3(ProtocolConfig(sender_index=0, **cfg), col)
            fine = proto.run_protocol3(ProtocolConfig(sender_index=1, **cfg), col)
            differs += hurt.distill.acceptance() != fine.distill.acceptance()
            blind += hurt.distill.receiver_serialization() == fine.distill.receiver_serialization()
            one_way &= all(e.sender == 4 for r in (hurt, fine) for e in r.log if e.topic == "distill")
    ok = not at.accepted and below.accepted and one_way and blind == 10 and t.seconds < 1
    detail = (f"errors=theta r rejected, errors<theta r accepted; zero S->R messages; receiver serialization "
              f"identical in {blind}/10 runs whose acceptance maps differed in {differs}/10")
    assert record(10, ok, detail, t.seconds)
