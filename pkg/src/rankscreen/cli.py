"""Command-line front end: ``rankscreen {screen,simulate,report}``.

Exit codes: 0 success, 2 malformed input or config, 3 degenerate column,
4 conflicting options.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (ALL_METHODS, CSV_COLUMNS, RunOptions, default_threads, read_csv, run_scenario,
                      write_csv, write_json)
from .iterative import IterativeConfig, irrcs, isis
from .screening import (CATEGORICAL, CONTINUOUS, METHODS, Dataset, ThresholdRule, compute_scores,
                        default_model_size, rank_order, select)
from .simgen import ScenarioConfig
from .stats import DegenerateColumnError

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_CONFLICT = 0, 2, 3, 4
SCREEN_SEED = 20240601


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read_table(path, response, cat_max):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}")
    rows = [r for r in rows if r]
    if len(rows) < 3:
        raise CliError(EXIT_INPUT, f"{path}: need a header row and at least 2 data rows")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise CliError(EXIT_INPUT, f"{path}: duplicate column names in header")
    if response not in header:
        raise CliError(EXIT_INPUT, f"{path}: response column {response!r} not in header")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CliError(EXIT_INPUT, f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i - 2, j] = float(cell)
            except ValueError:
                raise CliError(EXIT_INPUT, f"{path}:{i}: non-numeric value {cell!r} in column {header[j]!r}")
    if not np.isfinite(data).all():
        raise CliError(EXIT_INPUT, f"{path}: non-finite values present")
    k = header.index(response)
    feats = [h for j, h in enumerate(header) if j != k]
    if not feats:
        raise CliError(EXIT_INPUT, f"{path}: no feature columns besides the response")
    X = np.delete(data, k, axis=1)
    y = data[:, k]
    kinds = tuple(CATEGORICAL if np.unique(X[:, j]).size <= cat_max else CONTINUOUS for j in range(X.shape[1]))
    return Dataset(X, y, kinds, tuple(feats))


def _check_degenerate(d: Dataset, response):
    const = [d.names[j] for j in range(d.p) if np.ptp(d.X[:, j]) == 0.0]
    if np.ptp(d.y) == 0.0:
        const.insert(0, response)
    if const:
        raise CliError(EXIT_DEGENERATE, "degenerate (constant) columns: " + ", ".join(const))


def cmd_screen(args):
    if args.top is not None and args.gamma is not None:
        raise CliError(EXIT_CONFLICT, "--top and --gamma are mutually exclusive")
    if args.iterative and args.method not in ("rrcs", "sis"):
        raise CliError(EXIT_CONFLICT, "--iterative needs --method rrcs or sis")
    if args.iterative and args.gamma is not None:
        raise CliError(EXIT_CONFLICT, "--iterative uses a size budget; --gamma is not supported")
    if args.top is not None and args.top < 1:
        raise CliError(EXIT_INPUT, "--top must be >= 1")
    if args.gamma is not None and not args.gamma > 0:
        raise CliError(EXIT_INPUT, "--gamma must be > 0")
    d = _read_table(args.input, args.response, args.categorical_max)
    _check_degenerate(d, args.response)
    try:
        scores = compute_scores(d, args.method)
    except DegenerateColumnError as exc:
        raise CliError(EXIT_DEGENERATE, str(exc))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc))

    if args.iterative:
        if d.n < 4:
            raise CliError(EXIT_INPUT, "iterative screening needs at least 4 rows")
        budget = min(args.top, d.n - 1) if args.top is not None else None
        cfg = IterativeConfig(
            model_kind=args.model,
            size_budget=budget,
            comparator=args.method,
            fill_to_budget=budget is not None,
        )
        try:
            chosen, trace = (irrcs if args.method == "rrcs" else isis)(d, cfg)
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc))
        if trace.stop_reason == "refit_failed":
            print(f"warning: refit failed, stopping early ({trace.error})", file=sys.stderr)
    else:
        if args.gamma is not None:
            rule = ThresholdRule.threshold(args.gamma)
        elif args.top is not None:
            rule = ThresholdRule.top(min(args.top, d.p))
        else:
            rule = ThresholdRule.top(min(d.p, default_model_size(max(d.n, 3))))
        chosen = select(scores, rule)

    order = rank_order(scores)
    rank = np.empty(d.p, dtype=np.int64)
    rank[order] = np.arange(1, d.p + 1)
    chosen = set(int(k) for k in chosen)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "score", "abs_rank", "selected"])
    for j in order:
        w.writerow([d.names[j], repr(float(scores[j])), int(rank[j]), int(j in chosen)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


GRID_KEYS = ("example", "p", "n", "rho", "noise", "lambda_boxcox", "q", "s", "sigma", "beta_pattern")


def _expand_scenarios(conf):
    """Cross product over every list-valued scenario field."""
    if not isinstance(conf, dict):
        raise CliError(EXIT_INPUT, "config: top level must be a JSON object")
    blocks = conf.get("scenarios")
    if blocks is None:
        blocks = [{k: v for k, v in conf.items() if k in GRID_KEYS}]
    if not isinstance(blocks, list) or not blocks:
        raise CliError(EXIT_INPUT, "config.scenarios: must be a non-empty list")
    default_methods = conf.get("methods", ["rrcs", "sis"])
    out = []
    for b, block in enumerate(blocks):
        where = f"config.scenarios[{b}]" if "scenarios" in conf else "config"
        if not isinstance(block, dict):
            raise CliError(EXIT_INPUT, f"{where}: must be an object")
        for key in block:
            if key not in GRID_KEYS + ("methods",):
                raise CliError(EXIT_INPUT, f"{where}.{key}: unknown key")
        methods = block.get("methods", default_methods)
        if not isinstance(methods, list) or not methods:
            raise CliError(EXIT_INPUT, f"{where}.methods: must be a non-empty list")
        for m in methods:
            if m not in ALL_METHODS:
                raise CliError(EXIT_INPUT, f"{where}.methods: unknown method {m!r}")
        keys = [k for k in GRID_KEYS if k in block]
        values = [block[k] if isinstance(block[k], list) else [block[k]] for k in keys]
        for k, v in zip(keys, values):
            if not v:
                raise CliError(EXIT_INPUT, f"{where}.{k}: empty list")
        for combo in itertools.product(*values):
            fields = dict(zip(keys, combo))
            try:
                cfg = ScenarioConfig(**fields)
            except (TypeError, ValueError) as exc:
                raise CliError(EXIT_INPUT, f"{where}: {exc} (in {json.dumps(fields, sort_keys=True)})")
            out.append((cfg, list(methods)))
    return out


def _run_options(conf):
    try:
        opts = RunOptions(
            model_size=conf.get("model_size"),
            max_rounds=int(conf.get("max_rounds", 5)),
            iterative_model=conf.get("iterative_model", "linear"),
        )
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"config: {exc}")
    if opts.model_size is not None and (not isinstance(opts.model_size, int) or opts.model_size < 1):
        raise CliError(EXIT_INPUT, "config.model_size: must be a positive integer or null")
    if opts.max_rounds < 1:
        raise CliError(EXIT_INPUT, "config.max_rounds: must be >= 1")
    if opts.iterative_model != "linear":
        raise CliError(EXIT_INPUT, "config.iterative_model: only 'linear' is supported in simulations")
    return opts


def cmd_simulate(args):
    try:
        conf = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {args.config}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{args.config}: invalid JSON ({exc})")
    reps = args.reps if args.reps is not None else (conf.get("reps") if isinstance(conf, dict) else None)
    if reps is None:
        raise CliError(EXIT_INPUT, "config.reps: missing (or pass --reps)")
    if not isinstance(reps, int) or reps < 1:
        raise CliError(EXIT_INPUT, "reps: must be a positive integer")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise CliError(EXIT_INPUT, "--threads must be >= 1")
    scenarios = _expand_scenarios(conf)
    opts = _run_options(conf)
    out = Path(args.out)
    csv_path, json_path = out / "results.csv", out / "results.json"
    if not args.force and (csv_path.exists() or json_path.exists()):
        raise CliError(EXIT_INPUT, f"{out}: results already exist (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)

    summaries = []
    for cfg, methods in scenarios:
        cfg = cfg.with_seed(args.seed)
        summaries += run_scenario(cfg, methods, reps, parallelism=threads, options=opts)
    write_csv(summaries, csv_path)
    meta = {"version": __version__, "seed": args.seed, "reps": reps,
            "options": {"model_size": opts.model_size, "max_rounds": opts.max_rounds,
                        "iterative_model": opts.iterative_model}}
    write_json(summaries, json_path, meta)
    print(_markdown([s.csv_row() for s in summaries], pivot=False))
    return EXIT_OK


def _markdown(rows, pivot=True):
    if not rows:
        return ""
    if not pivot:
        cols = [c for c in CSV_COLUMNS if c != "wall_time_s"]
        lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
        lines += ["| " + " | ".join(str(r[c]) for c in cols) + " |" for r in rows]
        return "\n".join(lines)
    # group as the published tables: one block per design, methods as rows,
    # rho across columns (or n when rho is fixed)
    blocks = {}
    for r in rows:
        blocks.setdefault((r["example"], r["p"], r["noise"]), []).append(r)
    out = []
    for (ex, p, noise), rs in blocks.items():
        by = "rho" if len({r["rho"] for r in rs}) > 1 or len({r["n"] for r in rs}) == 1 else "n"
        other = "n" if by == "rho" else "rho"
        cols = sorted({r[by] for r in rs}, key=float)
        for fixed in sorted({r[other] for r in rs}, key=float):
            sub = [r for r in rs if r[other] == fixed]
            out.append(f"### {ex}, p={p}, {other}={fixed}, noise={noise}")
            out.append("")
            out.append("| method | " + " | ".join(f"{by}={c}" for c in cols) + " |")
            out.append("|---|" + "---|" * len(cols))
            methods = list(dict.fromkeys(r["method"] for r in sub))
            for m in methods:
                cells = []
                for c in cols:
                    hit = [r for r in sub if r["method"] == m and r[by] == c]
                    if not hit:
                        cells.append("")
                        continue
                    r = hit[0]
                    cell = r["inclusion_proportion"]
                    if r.get("mmms"):
                        cell += f" [{r['mmms']} ({r['rsd']})]"
                    cells.append(cell)
                out.append(f"| {m} | " + " | ".join(cells) + " |")
            out.append("")
    return "\n".join(out)


def cmd_report(args):
    root = Path(args.results)
    if not root.is_dir():
        raise CliError(EXIT_INPUT, f"{root}: no such results directory")
    files = sorted(root.rglob("*.csv"))
    rows = []
    for f in files:
        part = read_csv(f)
        if part and set(CSV_COLUMNS) <= set(part[0]):
            rows += part
    if not rows:
        raise CliError(EXIT_INPUT, f"{root}: no result CSV files found")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = _markdown(rows) + "\n"
    _emit(text, args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_INPUT, message)


def build_parser():
    ap = _Parser(prog="rankscreen", description="Rank-correlation feature screening toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("screen", help="rank the columns of a CSV file against a response")
    s.add_argument("input")
    s.add_argument("--response", required=True, help="name of the response column")
    s.add_argument("--method", choices=METHODS, default="rrcs")
    s.add_argument("--top", type=int, help="keep the d best-ranked features")
    s.add_argument("--gamma", type=float, help="keep features with |score| > gamma")
    s.add_argument("--iterative", action="store_true", help="run IRRCS (rrcs) or ISIS (sis)")
    s.add_argument("--model", choices=("linear", "transformation", "logistic"), default="linear")
    s.add_argument("--categorical-max", type=int, default=10,
                   help="columns with at most this many distinct values are tagged categorical")
    s.add_argument("--seed", type=int, default=SCREEN_SEED,
                   help="recorded for reproducibility; the refits themselves are deterministic")
    s.add_argument("--out", help="output CSV path (default: stdout)")
    s.set_defaults(func=cmd_screen)

    m = sub.add_parser("simulate", help="run simulation scenarios from a JSON config")
    m.add_argument("config")
    m.add_argument("--reps", type=int)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--threads", type=int, help="worker processes (default: $RANKSCREEN_THREADS or 1)")
    m.add_argument("--out", required=True, help="output directory")
    m.add_argument("--force", action="store_true", help="overwrite existing results")
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="merge result CSVs into tables")
    r.add_argument("results")
    r.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"rankscreen: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
