#!/usr/bin/env python3
"""Error-versus-nodes ladders for every registered study operation."""

import argparse

from sigcone.harness import STUDY_OPS, SuiteConfig, convergence_study, study_decays


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", default="16,24,32,48,64")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    ladder = [int(tok) for tok in args.ladder.split(",")]
    config = SuiteConfig() if args.seed is None else SuiteConfig(seed=args.seed)

    header = f"{'operation':>24} " + " ".join(f"{n:>11}" for n in ladder) + "  decay"
    print(header)
    for op in STUDY_OPS:
        rows = convergence_study(op, ladder, config)
        cells = " ".join(f"{r.rel_err:>11.3e}" for r in rows)
        print(f"{op:>24} {cells}  {'yes' if study_decays(rows) else 'NO'}")


if __name__ == "__main__":
    main()
