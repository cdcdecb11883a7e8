#!/usr/bin/env python3
"""Total-variation distance between the collusion's views under two candidate senders.

Runs two scenarios: an honest execution watched by one potential sender, and
the reveal-variant attack (corrupted distributor plus corrupted receiver,
targeted noise on one honest participant). Prints a JSON report.
"""
import argparse
import json

from anonqtx import analysis as an
from anonqtx.adversary import AdversaryStrategy, CollusionSpec, Kind
from anonqtx.protocol import ProtocolConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--m", type=int, default=10)
    args = ap.parse_args(argv)

    base = dict(n=args.n, m=args.m, p=0.25, theta=0.1, sender_index=0)
    noise = AdversaryStrategy(kind=Kind.TARGETED_NOISE, target=0)
    corrupt = {args.n - 2, args.n - 1}
    scenarios = {
        "honest, one potential sender watching": (ProtocolConfig(**base), CollusionSpec({2})),
        "reveal variant under targeted noise": (ProtocolConfig(distill_variant="reveal", **base),
                                               CollusionSpec(corrupt, noise)),
        "per-distributor variant under targeted noise": (ProtocolConfig(distill_variant="per_distributor", **base),
                                                         CollusionSpec(corrupt, noise)),
    }
    out = {}
    for name, (cfg, col) in scenarios.items():
        out[name] = an.anonymity_test(cfg, col, args.trials, args.seed, alt_sender=1).to_dict()
    print(json.dumps({"seed": args.seed, "trials": args.trials, "scenarios": out}, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
