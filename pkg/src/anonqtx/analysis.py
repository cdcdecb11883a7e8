"""Quantitative checks: detection bound, Monte Carlo detection, anonymity, measurement tradeoff.

Monte Carlo trials are keyed by :func:`anonqtx.rng.trial_seed` and reduced
in trial order, so serial and parallel execution give identical reports.
``ANONQTX_THREADS`` caps the number of worker processes (default 1).

Anonymity is estimated from *coarse* adversary views: the full canonical
view has unbounded support, so the histogram key keeps only

* the non-empty disagreement announcements, in order,
* any acceptance map the collusion can read,
* per corrupted participant, the parity of its recorded outcomes.

Everything else in the view is checked structurally instead: with common
random numbers (the same trial seed for both senders) the full canonical
views must coincide, and the fraction of trials where they do not is
reported as ``mismatch_rate``. That fraction upper-bounds the true total
variation distance.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import adversary as adv
from . import qsim
from .protocol import ProtocolConfig, run_protocol2, run_protocol3
from .rng import check_seed, trial_seed

NONNEGLIGIBLE = 1e-6


def _check_unit(name: str, v: float, open_low=False, open_high=False) -> None:
    lo_ok = v > 0 if open_low else v >= 0
    hi_ok = v < 1 if open_high else v <= 1
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name}={v} outside its domain")


def detection_bound(p: float, xi: float, theta: float, m: float) -> float:
    """Probability that ``theta * m * (1 - p)`` disruptions all go undetected."""
    _check_unit("p", p)
    _check_unit("xi", xi)
    _check_unit("theta", theta, open_low=True)
    if m < 0:
        raise ValueError("m must be non-negative")
    return (1.0 - p * xi) ** (theta * m * (1.0 - p))


def min_rounds(p: float, xi: float, theta: float, target_prob: float) -> int:
    """Smallest integer m with ``detection_bound(p, xi, theta, m) <= target_prob``."""
    _check_unit("target_prob", target_prob, open_low=True, open_high=True)
    _check_unit("p", p, open_high=True)
    _check_unit("theta", theta, open_low=True)
    if p * xi <= 0:
        raise ValueError("p * xi = 0: no number of rounds reaches the target")
    if p * xi >= 1:
        raise ValueError("p * xi = 1 requires p = 1, which leaves no actual-mode rounds")
    m = max(1, math.ceil(math.log(target_prob, 1 - p * xi) / (theta * (1 - p))))
    # guard the ceiling against floating error in the logarithm
    while m > 1 and detection_bound(p, xi, theta, m - 1) <= target_prob:
        m -= 1
    while detection_bound(p, xi, theta, m) > target_prob:
        m += 1
    return m


def disruptions_for(p: float, theta: float, m: int) -> int:
    """Integer disruption count ``theta * m * (1 - p)``, rounded half up."""
    return int(math.floor(theta * m * (1 - p) + 0.5))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ANONQTX_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    w = _workers()
    if w <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * w))))


# --- detection -------------------------------------------------------------------

@dataclass
class DetectionExperiment:
    p: float
    xi: float
    theta: float = 0.1
    m: int = 0
    trials: int = 10_000
    disruptions_per_trial: int | None = None
    n: int = 3

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.disruptions_per_trial is None:
            self.disruptions_per_trial = disruptions_for(self.p, self.theta, self.m)
        if self.disruptions_per_trial < 0:
            raise ValueError("disruptions_per_trial must be >= 0")

    @property
    def k(self) -> int:
        return self.disruptions_per_trial

    def expected(self) -> float:
        return (1.0 - self.p * self.xi) ** self.k


@dataclass
class DetectionResult:
    rate: float
    ci_low: float
    ci_high: float
    trials: int
    undetected: int
    expected: float

    @property
    def sigma(self) -> float:
        """Binomial standard error under the closed-form probability."""
        return math.sqrt(self.expected * (1 - self.expected) / self.trials)

    def within(self, n_sigma: float = 3.0) -> bool:
        return abs(self.rate - self.expected) <= n_sigma * self.sigma


def wilson_interval(successes: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _detection_trial(args) -> bool:
    exp, seed = args
    k = exp.k
    cfg = ProtocolConfig(n=exp.n, m=max(k, 1), p=exp.p, theta=exp.theta, sender_index=0,
                         max_restarts=0, seed=seed)
    strategy = adv.AdversaryStrategy(kind=adv.Kind.TRAP_GUESS, xi=exp.xi, victims=frozenset({0}), budget=k)
    run = run_protocol3(cfg, adv.CollusionSpec(frozenset({1}), strategy))
    return not run.disagreements


def monte_carlo_detection(experiment: DetectionExperiment, seed: int) -> DetectionResult:
    """Fraction of trials in which ``k`` trap-guessing disruptions raise no disagreement.

    Each trial runs Protocol 3 with S = P0 as the honest distributor and a
    single corrupted P1 disrupting the first ``k`` systems it receives from
    P0; a trial stops at the first announced disagreement.
    """
    seed = check_seed(seed)
    flags = _map(_detection_trial, [(experiment, trial_seed(seed, t)) for t in range(experiment.trials)])
    undetected = sum(flags)
    lo, hi = wilson_interval(undetected, experiment.trials)
    return DetectionResult(undetected / experiment.trials, lo, hi, experiment.trials, undetected,
                           experiment.expected())


# --- anonymity -------------------------------------------------------------------

def coarse_view(view: adv.AdversaryView) -> str:
    if view.is_empty():
        return "{}"
    announced = [e["payload"] for e in view.log
                 if e.get("topic") == "disagreements" and e.get("payload") not in (None, "[]")]
    acceptance = [e["payload"] for e in view.log if e.get("topic") == "acceptance" and "payload" in e]
    parity = {pid: sum(rec["outcomes"].values()) & 1 for pid, rec in view.records.items()}
    return json.dumps({"announced": announced, "acceptance": acceptance, "parity": parity}, sort_keys=True)


def tv_distance(a: Counter, b: Counter) -> float:
    na, nb = sum(a.values()), sum(b.values())
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a[k] / na - b[k] / nb) for k in keys)


@dataclass
class AnonymityReport:
    tv_estimate: float
    trials: int
    sender_pair: tuple
    collusion: dict
    mismatch_rate: float | None
    support: int
    paired: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sender_pair"] = list(self.sender_pair)
        return d


def _anon_trial(args):
    config, collusion, protocol, s, s2, seed_a, seed_b = args
    run = run_protocol3 if protocol == 3 else run_protocol2
    va = run(replace(config, sender_index=s, seed=seed_a), collusion).view()
    vb = run(replace(config, sender_index=s2, seed=seed_b), collusion).view()
    same = None if seed_a != seed_b else va.canonical() == vb.canonical()
    return coarse_view(va), coarse_view(vb), same


def anonymity_test(config: ProtocolConfig, collusion: adv.CollusionSpec, trials: int, seed: int,
                   alt_sender: int, protocol: int = 3, paired: bool = True) -> AnonymityReport:
    """Compare the collusion's view under sender ``config.sender_index`` and ``alt_sender``.

    With ``paired`` both runs of a trial share the trial seed (common random
    numbers); otherwise the second run gets an independent seed.
    """
    s, s2 = config.sender_index, alt_sender
    if s == s2 or s in collusion.corrupted or s2 in collusion.corrupted:
        raise ValueError("need two distinct senders outside the collusion")
    if not 0 <= s2 < config.n - 1:
        raise ValueError(f"alt_sender {s2} is not a potential sender")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = check_seed(seed)
    jobs = []
    for t in range(trials):
        sa = trial_seed(seed, t)
        sb = sa if paired else trial_seed(seed, t, 1)
        jobs.append((config, collusion, protocol, s, s2, sa, sb))
    results = _map(_anon_trial, jobs)
    ha = Counter(r[0] for r in results)
    hb = Counter(r[1] for r in results)
    mismatch = sum(not r[2] for r in results) / trials if paired else None
    return AnonymityReport(tv_distance(ha, hb), trials, (s, s2), collusion.to_dict(), mismatch,
                           len(set(ha) | set(hb)), paired)


# --- measurement tradeoff ----------------------------------------------------------

@dataclass
class Lemma1Report:
    angle: float
    measurement: str
    distinguish_prob: float
    collapse_distance: float
    cutoff: float = NONNEGLIGIBLE

    def to_dict(self) -> dict:
        return asdict(self)


def rotated_basis(t: float) -> tuple[np.ndarray, np.ndarray]:
    """Basis at angle t: t = 0 is {|0>, |1>}, t = pi/4 is {|+>, -|->}."""
    c, s = math.cos(t), math.sin(t)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


_DUAL = (np.array([1, 1], dtype=complex) / math.sqrt(2), np.array([1, -1], dtype=complex) / math.sqrt(2))


def _corrupt_projector(n: int, vecs) -> np.ndarray:
    """Projector onto vecs[k] on qubit k (k < len(vecs)), identity on the rest."""
    ops = [np.outer(v, v.conj()) for v in vecs] + [np.eye(2)] * (n - len(vecs))
    full = np.ones((1, 1), dtype=complex)
    for op in ops:
        full = np.kron(op, full)
    return full


def _conditional_state(psi: np.ndarray, proj: np.ndarray, n: int, m: int):
    """Normalized post-measurement state traced over qubits 0..m-1, and its probability."""
    v = proj @ psi
    prob = float(np.vdot(psi, v).real)
    if prob <= 0:
        return None, prob
    rho = qsim.DensityMatrix(np.outer(v, v.conj()) / prob, check=False)
    return qsim.partial_trace(rho, range(m, n)), prob


def lemma1_point(n: int, m: int, t: float, cutoff: float = NONNEGLIGIBLE) -> Lemma1Report:
    b = rotated_basis(t)
    outcomes = list(np.ndindex(*(2,) * m))
    # (a) success at naming the dual-basis product the corrupted qubits were in
    success = 0.0
    for x in outcomes:
        trap = qsim.tensor(*(qsim.Statevector(_DUAL[k], check=False) for k in x)).amplitudes
        proj = _corrupt_projector(m, [b[k] for k in x])
        success += float(np.vdot(trap, proj @ trap).real)
    distinguish = success / len(outcomes)
    # (b) honest-qubit collapse vs the dual-measurement prediction for the same answer
    psi = qsim.make_ghz(n).amplitudes
    worst = 0.0
    for x in outcomes:
        actual, prob = _conditional_state(psi, _corrupt_projector(n, [b[k] for k in x]), n, m)
        if prob < cutoff:
            continue
        predicted, _ = _conditional_state(psi, _corrupt_projector(n, [_DUAL[k] for k in x]), n, m)
        worst = max(worst, qsim.trace_distance(actual, predicted))
    return Lemma1Report(t, f"product rotated basis, angle {t:.6f} rad", distinguish, worst, cutoff)


def lemma1_check(n: int = 3, m_corrupt: int = 1, grid: int = 21, cutoff: float = NONNEGLIGIBLE) -> list:
    """Evaluate :func:`lemma1_point` on ``grid`` angles from 0 (computational) to pi/4 (dual)."""
    if not 1 <= m_corrupt < n <= 6:
        raise ValueError("need 1 <= m_corrupt < n <= 6")
    if grid < 2:
        raise ValueError("grid needs at least the two endpoints")
    return [lemma1_point(n, m_corrupt, t, cutoff) for t in np.linspace(0.0, math.pi / 4, grid)]


def tradeoff_is_monotone(reports, tol: float = 1e-12) -> bool:
    """Sorted by distinguish_prob, collapse_distance never increases."""
    rows = sorted(reports, key=lambda r: r.distinguish_prob)
    return all(b.collapse_distance <= a.collapse_distance + tol for a, b in zip(rows, rows[1:]))


# --- CSV -------------------------------------------------------------------------

LEMMA1_COLUMNS = ("angle", "measurement", "distinguish_prob", "collapse_distance", "cutoff")


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r if isinstance(r, dict) else r.to_dict())
    return buf.getvalue()
