"""``anonqtx`` command line: run a protocol, verify the build, sweep the detection bound.

Exit codes
    run     0 ok, 1 configuration or output error, 2 restart limit reached
    verify  number of failed checks (0 when everything passes)
    sweep   0 ok, 1 invalid ranges or output error

Outputs are written with sorted keys and no timestamps, so a (config, seed)
pair determines every byte. Existing files are never replaced unless
``--force-overwrite`` is given.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import re
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


from . import adversary as adv
from . import analysis as an
from . import distill as dst
from . import protocol as proto
from . import qsim
from .protocol import ProtocolConfig, RunStatus
from .rng import SEED_MAX, check_seed, stream, trial_seed

CONFIG_KEYS = ("protocol", "n", "m", "p", "theta", "xi", "sender_index", "variant", "adversary",
               "distill_variant", "trials", "seed", "max_restarts")
SWEEP_KEYS = ("p", "xi", "theta", "m", "trials", "target", "seed")
SWEEP_COLUMNS = ("p", "xi", "theta", "m", "k", "bound", "bound_k", "mc_rate", "ci_low", "ci_high",
                 "trials", "agree", "min_rounds", "target", "seed")
RUN_PAIR_COLUMNS = ("distributor", "attempt", "round", "sender_handle", "receiver_handle", "label", "fidelity")
QUICK_FACTOR = 10


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    subcommand: str
    config: str | None
    seed: int
    out: Path
    format: str

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "config": self.config, "seed": self.seed,
                "out": str(self.out), "format": self.format}


def schema() -> dict:
    return json.loads(resources.files("anonqtx").joinpath("result.schema.json").read_text())


# --- config parsing -------------------------------------------------------------

def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_json(path: str) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1:1: top level must be a JSON object")
    return doc, text


def _fail(path: str, text: str, key: str | None, msg: str):
    line = _key_line(text, key) if key else None
    where = f"{path}:{line}" if line else path
    raise ConfigError(f"{where}: {msg}")


def parse_run_config(doc: dict, text: str, path: str, seed: int | None):
    """Validate a run configuration; returns (protocol, ProtocolConfig, CollusionSpec, extras)."""
    for k in doc:
        if k not in CONFIG_KEYS:
            _fail(path, text, k, f"unknown key {k!r}")
    protocol = doc.get("protocol", 3)
    if protocol not in (1, 2, 3):
        _fail(path, text, "protocol", f"protocol must be 1, 2 or 3, got {protocol!r}")
    kw = {k: doc[k] for k in ("n", "m", "p", "theta", "sender_index", "variant", "distill_variant",
                              "max_restarts") if k in doc}
    kw["seed"] = seed if seed is not None else doc.get("seed", 0)
    for k in ("n", "m", "sender_index", "max_restarts"):
        if k in kw and not (isinstance(kw[k], int) and not isinstance(kw[k], bool)):
            _fail(path, text, k, f"{k} must be an integer")
    for k in ("p", "theta"):
        if k in kw and not isinstance(kw[k], (int, float)):
            _fail(path, text, k, f"{k} must be a number")
    try:
        cfg = ProtocolConfig(**kw)
    except (ValueError, TypeError) as e:
        lead = re.match(r"\w+", str(e))
        _fail(path, text, lead.group(0) if lead and lead.group(0) in kw else None, str(e))
    xi = doc.get("xi")
    if xi is not None and not (isinstance(xi, (int, float)) and 0 <= xi <= 1):
        _fail(path, text, "xi", "xi must be in [0, 1]")
    trials = doc.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        _fail(path, text, "trials", "trials must be a positive integer")
    try:
        a = doc.get("adversary")
        if a is not None and xi is not None:
            s = a.get("strategy", {})
            if s.get("kind") == "TRAP_GUESS" and "xi" not in s:
                a = {**a, "strategy": {**s, "xi": xi}}
        col = adv.CollusionSpec.from_dict(a)
        col.validate(cfg.n, cfg.sender_index)
    except (ValueError, TypeError, AttributeError) as e:
        _fail(path, text, "adversary", f"adversary: {e}")
    return protocol, cfg, col, {"xi": xi, "trials": trials}


# --- output ----------------------------------------------------------------------

def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_outputs(out: Path, files: dict, force: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    clash = [name for name in files if (out / name).exists()]
    if clash and not force:
        raise ConfigError(f"{out}: refusing to overwrite {', '.join(sorted(clash))} (use --force-overwrite)")
    for name, content in files.items():
        (out / name).write_text(content)


def _csv(rows, columns) -> str:
    return an.to_csv(rows, columns)


# --- run ------------------------------------------------------------------------

def _teleport(cfg: ProtocolConfig, col) -> tuple[dict, proto.ProtocolRun]:
    run = proto.run_protocol2(cfg, col)
    pair = next(pr for pr in run.epr.pairs if pr.distributor == cfg.sender_index)
    msg = qsim.random_state(stream(cfg.seed, "message"), 1)
    tel = proto.run_protocol1(cfg, msg, pair, network=proto.Network(cfg.n, run.log))
    doc = run.to_document()
    doc["protocol"] = 1
    doc["teleport"] = {
        "variant": cfg.variant.value,
        "pair_distributor": pair.distributor,
        "outcome": list(tel.outcome.bits),
        "fidelity": round(qsim.fidelity(tel.received, msg), 12),
    }
    return doc, run


def cmd_run(args) -> int:
    doc, text = load_json(args.config)
    protocol, cfg, col, extras = parse_run_config(doc, text, args.config, args.seed)
    if protocol == 1:
        result, run = _teleport(cfg, col)
    else:
        run = proto.run_protocol2(cfg, col) if protocol == 2 else proto.run_protocol3(cfg, col)
        result = run.to_document()
    result.update(kind="run", seed=cfg.seed, manifest=RunManifest("run", args.config, cfg.seed, args.out,
                                                                  args.format).to_dict(), **extras)
    # the JSON document is always written; csv adds a flat table of the pairs
    files = {"channel_log.jsonl": run.log.to_jsonl(), "result.json": _dump(result)}
    if args.format == "csv":
        files["result.csv"] = _csv(result["pairs"], RUN_PAIR_COLUMNS)
    _write_outputs(args.out, files, args.force_overwrite)
    print(f"protocol {protocol}: {result['num_pairs']} pairs, status {result['status']}, seed {cfg.seed}")
    return 2 if run.status is RunStatus.RESTART_LIMIT else 0


# --- verify ------------------------------------------------------------------------

def _check_parity_law() -> tuple[bool, str]:
    worst = 0.0
    for n in range(3, 11):
        base = qsim.make_ghz(n)
        for bits in itertools.product((0, 1), repeat=n - 2):
            st = base
            for b in bits:
                _, st = qsim.project_dual(st, 1, qsim.DualOutcome.from_bit(b))
            st = proto.repair_parity([qsim.DualOutcome.from_bit(b) for b in bits], st, 0)
            worst = max(worst, 1 - qsim.fidelity(st, qsim.PHI_PLUS))
    return worst <= 1e-9, f"max 1-F = {worst:.2e} over all branches, n=3..10"


def _check_protocol2(seed) -> tuple[bool, str]:
    run = proto.run_protocol2(ProtocolConfig(n=5, seed=seed))
    fids = [pr.fidelity for pr in run.epr.pairs]
    ok = len(fids) == 4 and min(fids) >= 1 - 1e-9
    return ok, f"{len(fids)} pairs, min fidelity {min(fids):.12f}"


def _check_teleport(seed) -> tuple[bool, str]:
    rng = stream(seed, "verify", "teleport")
    worst = 1.0
    pair = proto.run_protocol2(ProtocolConfig(n=3, seed=seed)).epr.pairs[0]
    for variant in proto.Variant:
        cfg = ProtocolConfig(n=3, variant=variant, seed=seed)
        for _ in range(100):
            msg = qsim.random_state(rng, 1)
            worst = min(worst, qsim.fidelity(proto.run_protocol1(cfg, msg, pair, rng).received, msg))
    return worst >= 1 - 1e-9, f"min fidelity {worst:.12f} over 2x100 inputs"


def _check_bound_grid(seed, quick) -> tuple[bool, str]:
    scale = QUICK_FACTOR if quick else 1
    nsig = 3.0 * (math.sqrt(QUICK_FACTOR) if quick else 1.0)
    head = an.monte_carlo_detection(an.DetectionExperiment(p=0.25, xi=0.5, trials=10_000 // scale,
                                                           disruptions_per_trial=15), seed)
    bad = [] if head.within(nsig) else ["headline"]
    for i, (p, xi, k) in enumerate(itertools.product((0.1, 0.25, 0.5), (0.1, 0.25, 0.5), (1, 5, 15))):
        r = an.monte_carlo_detection(an.DetectionExperiment(p=p, xi=xi, trials=2000 // scale,
                                                            disruptions_per_trial=k), seed + 1 + i)
        if not r.within(nsig):
            bad.append(f"(p={p},xi={xi},k={k})")
    return not bad, f"headline {head.rate:.4f} vs {head.expected:.4f}; {27 - len([b for b in bad if b != 'headline'])}/27 grid points within {nsig:.2f} sigma"


def _check_min_rounds(seed) -> tuple[bool, str]:
    rng = stream(seed, "verify", "min_rounds")
    bad = 0
    for _ in range(50):
        p, xi, theta = rng.uniform(0.05, 0.95, 3)
        target = rng.uniform(1e-4, 0.9)
        m = an.min_rounds(p, xi, theta, target)
        ok = an.detection_bound(p, xi, theta, m) <= target and (
            m == 1 or target < an.detection_bound(p, xi, theta, m - 1))
        bad += not ok
    return bad == 0, f"{50 - bad}/50 random points adjoint"


def _check_anonymity(seed, quick) -> tuple[bool, str]:
    trials = 10_000 // (QUICK_FACTOR if quick else 1)
    tol = 0.05 * (math.sqrt(QUICK_FACTOR) if quick else 1.0)
    rep = an.anonymity_test(ProtocolConfig(n=5, m=10), adv.CollusionSpec({2}), trials, seed, alt_sender=1)
    return rep.tv_estimate <= tol, f"TV {rep.tv_estimate:.4f} (tol {tol:.3f}), mismatch {rep.mismatch_rate:.4f}, {trials} trials"


def _check_lemma1() -> tuple[bool, str]:
    reps = an.lemma1_check(3, 1, grid=21)
    dual, comp = reps[-1], reps[0]
    ok = (abs(dual.distinguish_prob - 1) <= 1e-9 and dual.collapse_distance <= 1e-9
          and abs(comp.distinguish_prob - 0.5) <= 1e-9 and an.tradeoff_is_monotone(reps))
    return ok, f"dual ({dual.distinguish_prob:.3f}, {dual.collapse_distance:.1e}); computational distinguish {comp.distinguish_prob:.3f}"


def _check_distill(seed) -> tuple[bool, str]:
    rng = stream(seed, "verify", "distill")
    good, bad = qsim.BellLabel.PHI_PLUS, qsim.BellLabel.PSI_MINUS
    at = dst.one_way_distill([bad] + [good] * 9, 0.1, rng)
    below = dst.one_way_distill([bad] + [good] * 19, 0.1, rng)
    ok = not at.accepted and below.accepted
    ok &= all(m["direction"] == dst.R_TO_S for m in at.transcript + below.transcript)
    return ok, "errors = theta r rejected, errors < theta r accepted, R->S only"


def battery(seed: int, quick: bool):
    """Yield (name, passed, detail, seconds) for every verification check."""
    checks = [
        ("GHZ parity law", _check_parity_law),
        ("Protocol 2 honest end-to-end", lambda: _check_protocol2(seed)),
        ("teleportation (MTAS, inverted MTAR)", lambda: _check_teleport(seed)),
        ("detection bound vs Monte Carlo", lambda: _check_bound_grid(seed, quick)),
        ("min_rounds adjointness", lambda: _check_min_rounds(seed)),
        ("anonymity null test", lambda: _check_anonymity(seed, quick)),
        ("measurement tradeoff endpoints", _check_lemma1),
        ("distillation threshold", lambda: _check_distill(seed)),
    ]
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as e:  # a crashing check is a failing check
            ok, detail = False, f"{type(e).__name__}: {e}"
        yield name, ok, detail, time.perf_counter() - t0


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 2024
    if args.inject_fault == "parity":
        proto.PARITY_FAULT = True
    rows = []
    try:
        width = 38
        print(f"{'check':<{width}} result  detail")
        for name, ok, detail, secs in battery(seed, args.quick):
            ok = bool(ok)
            rows.append({"check": name, "passed": ok, "detail": detail, "seconds": round(secs, 3)})
            print(f"{name:<{width}} {'PASS' if ok else 'FAIL'}    {detail}", flush=True)
    finally:
        proto.PARITY_FAULT = False
    failures = sum(not r["passed"] for r in rows)
    if args.out is not None:
        doc = {"kind": "verify", "seed": seed, "quick": args.quick, "failures": failures,
               "checks": [{k: v for k, v in r.items() if k != "seconds"} for r in rows]}
        files = ({"verify.json": _dump(doc)} if args.format == "json"
                 else {"verify.csv": _csv(doc["checks"], ("check", "passed", "detail"))})
        _write_outputs(args.out, files, args.force_overwrite)
    print(f"{failures} failure(s)")
    return failures


# --- sweep ------------------------------------------------------------------------

def _axis(doc, key, default, kind):
    v = doc.get(key, default)
    vals = v if isinstance(v, list) else [v]
    if not all(isinstance(x, kind) and not isinstance(x, bool) for x in vals):
        raise ValueError(f"{key} must be a {kind.__name__ if isinstance(kind, type) else 'number'} or a list of them")
    return vals


def parse_sweep(doc, text, path, seed):
    for k in doc:
        if k not in SWEEP_KEYS:
            _fail(path, text, k, f"unknown key {k!r}")
    try:
        grid = {
            "p": _axis(doc, "p", 0.25, (int, float)), "xi": _axis(doc, "xi", 0.5, (int, float)),
            "theta": _axis(doc, "theta", 0.1, (int, float)), "m": _axis(doc, "m", 100, int),
        }
    except ValueError as e:
        _fail(path, text, str(e).split()[0], str(e))
    for key, lo, hi, open_lo, open_hi in (("p", 0, 1, False, True), ("xi", 0, 1, False, False),
                                          ("theta", 0, 1, True, True)):
        for v in grid[key]:
            if v < lo or v > hi or (open_lo and v == lo) or (open_hi and v == hi):
                _fail(path, text, key, f"{key}={v} out of range")
    if any(v < 1 for v in grid["m"]):
        _fail(path, text, "m", "m values must be >= 1")
    trials, target = doc.get("trials", 2000), doc.get("target", 0.01)
    if not isinstance(trials, int) or trials < 1:
        _fail(path, text, "trials", "trials must be a positive integer")
    if not (isinstance(target, (int, float)) and 0 < target < 1):
        _fail(path, text, "target", "target must be in (0, 1)")
    try:
        s = check_seed(seed if seed is not None else doc.get("seed", 0))
    except ValueError as e:
        _fail(path, text, "seed", str(e))
    return grid, trials, target, s


def sweep_rows(grid, trials, target, seed):
    for idx, (p, xi, theta, m) in enumerate(itertools.product(grid["p"], grid["xi"], grid["theta"], grid["m"])):
        k = an.disruptions_for(p, theta, m)
        exp = an.DetectionExperiment(p=p, xi=xi, theta=theta, m=m, trials=trials, disruptions_per_trial=k)
        r = an.monte_carlo_detection(exp, trial_seed(seed, idx, "sweep"))
        try:
            mr = an.min_rounds(p, xi, theta, target)
        except ValueError:
            mr = None
        yield {
            "p": p, "xi": xi, "theta": theta, "m": m, "k": k,
            "bound": an.detection_bound(p, xi, theta, m), "bound_k": exp.expected(),
            "mc_rate": r.rate, "ci_low": r.ci_low, "ci_high": r.ci_high, "trials": trials,
            "agree": r.ci_low <= exp.expected() <= r.ci_high, "min_rounds": mr, "target": target, "seed": seed,
        }


def cmd_sweep(args) -> int:
    doc, text = load_json(args.config)
    grid, trials, target, seed = parse_sweep(doc, text, args.config, args.seed)
    rows = list(sweep_rows(grid, trials, target, seed))
    if args.format == "csv":
        files = {"sweep.csv": _csv(rows, SWEEP_COLUMNS)}
    else:
        files = {"sweep.json": _dump({"kind": "sweep", "seed": seed, "columns": list(SWEEP_COLUMNS), "rows": rows})}
    _write_outputs(args.out, files, args.force_overwrite)
    print(f"{len(rows)} sweep point(s), seed {seed}")
    return 0


# --- entry point --------------------------------------------------------------------

def _seed_arg(s: str) -> int:
    try:
        return check_seed(int(s))
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer in [0, {SEED_MAX}]") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed_arg, default=None, help="64-bit seed (overrides the config)")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--force-overwrite", action="store_true", help="replace existing output files")

    ap = argparse.ArgumentParser(prog="anonqtx", description="Anonymous quantum transmission simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one protocol execution")
    r.add_argument("--config", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the verification battery")
    v.add_argument("--quick", action="store_true", help="10x fewer trials, sqrt(10)x wider tolerances")
    v.add_argument("--inject-fault", choices=("parity",), default=None, help=argparse.SUPPRESS)
    s = sub.add_parser("sweep", parents=[common], help="grid-evaluate the detection bound")
    s.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    if args.out is None and args.command != "verify":
        args.out = Path("results")
    try:
        return {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
