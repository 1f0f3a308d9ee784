#!/usr/bin/env python3
"""Drive the bundled experiment configs through the CLI.

Each subcommand writes CSV/JSON artifacts plus a manifest into its own
subdirectory of --out. The bundled trial counts are sized for a coffee-break
run; pass --trials to override them (e.g. 10000000 for headline-grade
confusion matrices).
"""

import argparse
import sys
import time
from pathlib import Path

from risid.cli import main as risid_main

CONFIG_DIR = Path(__file__).parent / "configs"

RUNS = [
    ("pf-single", "pf_single.txt"),
    ("pmiss-corr", "pmiss_corr.txt"),
    ("pmiss-m", "pmiss_m.txt"),
    ("pmiss-n", "pmiss_n.txt"),
    ("pf-two-m", "pf_two_m.txt"),
    ("pf-two-np", "pf_two_np.txt"),
    ("pmiss-two-m", "pmiss_two_m.txt"),
    ("pmiss-two-np", "pmiss_two_np.txt"),
    ("tradeoff", "tradeoff.txt"),
    ("confusion", "confusion.txt"),
    ("five-ris", "five_ris_set1.txt"),
    ("five-ris", "five_ris_set2.txt"),
    ("theory", "theory.txt"),
    ("design", "design.txt"),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--only", nargs="*", help="subcommand names to run")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    failures = 0
    for sub, config in RUNS:
        if args.only and sub not in args.only:
            continue
        label = config.removesuffix(".txt")
        out = args.out / label
        argv = [sub, "--config", str(CONFIG_DIR / config), "--out", str(out)]
        if args.trials is not None:
            argv += ["--trials", str(args.trials)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        t0 = time.time()
        code = risid_main(argv)
        status = "ok" if code == 0 else f"exit {code}"
        print(f"{label:<16} {status:<8} {time.time() - t0:7.1f}s -> {out}")
        failures += code != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
