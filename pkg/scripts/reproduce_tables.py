"""Run one of the bundled simulation configs and print the pivoted tables.

    python3 scripts/reproduce_tables.py table2_hidden --reps 200 --seed 1
    python3 scripts/reproduce_tables.py table1_desk --threads 8

Results land in results/<config>/ (results.csv + results.json); rerunning
with the same seed reproduces results.json byte for byte.
"""

import argparse
import sys
from pathlib import Path

from rankscreen.cli import main as cli

CONFIGS = Path(__file__).resolve().parent / "configs"


def main(argv=None):
    names = sorted(p.stem for p in CONFIGS.glob("*.json"))
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", choices=names)
    ap.add_argument("--reps", type=int, default=None, help="override the config's replication count")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)

    out = Path(args.out) / args.config
    cmd = ["simulate", str(CONFIGS / f"{args.config}.json"), "--seed", str(args.seed),
           "--out", str(out), "--force"]
    if args.reps is not None:
        cmd += ["--reps", str(args.reps)]
    if args.threads is not None:
        cmd += ["--threads", str(args.threads)]
    code = cli(cmd)
    if code:
        return code
    print()
    return cli(["report", str(out), "--format", "markdown"])


if __name__ == "__main__":
    sys.exit(main())
