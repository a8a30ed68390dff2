"""Replication runner and screening metrics.

Replications are farmed out to a process pool (spawn start method) with
serial kernels inside each worker. Every replication draws from its own
stream (base seed XOR rep), and results are aggregated in rep order, so the
output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing as mp

import numpy as np

from .iterative import IterativeConfig, irrcs, isis
from .screening import ThresholdRule, compute_scores, rank_order, select
from .simgen import ScenarioConfig, generate

SCREEN_METHODS = ("rrcs", "sis", "gcorr", "mmle")
ITERATIVE_METHODS = ("irrcs", "isis")
ALL_METHODS = SCREEN_METHODS + ITERATIVE_METHODS

CSV_COLUMNS = ("example", "p", "n", "rho", "noise", "method", "reps", "inclusion_proportion",
               "mmms", "rsd", "failures", "wall_time_s")


def minimum_model_size(scores, true_support) -> int:
    """1-based rank of the worst-ranked true variable (ties: smaller index first)."""
    true_support = np.asarray(true_support, dtype=np.int64)
    if true_support.size == 0:
        raise ValueError("true support is empty")
    order = rank_order(scores)
    pos = np.empty(order.size, dtype=np.int64)
    pos[order] = np.arange(1, order.size + 1)
    return int(pos[true_support].max())


def mmms_rsd(sizes):
    """(median, IQR / 1.34) with type-7 (linear interpolation) quartiles."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0:
        raise ValueError("no sizes given")
    q1, med, q3 = np.quantile(sizes, [0.25, 0.5, 0.75], method="linear")
    return float(med), float((q3 - q1) / 1.34)


def inclusion_proportion(selected_sets, true_support) -> float:
    truth = set(int(k) for k in true_support)
    sets = list(selected_sets)
    if not sets:
        raise ValueError("no replications given")
    return sum(truth <= set(int(k) for k in s) for s in sets) / len(sets)


@dataclass
class ReplicationSummary:
    method: str
    scenario: ScenarioConfig
    reps: int
    inclusion_proportion: float
    min_model_sizes: list
    mmms: float
    rsd: float
    wall_time: float = 0.0
    failures: int = 0
    details: list = field(default_factory=list)

    def csv_row(self):
        sc = self.scenario
        return {
            "example": sc.example, "p": sc.p, "n": sc.n, "rho": sc.rho, "noise": sc.noise,
            "method": self.method, "reps": self.reps,
            "inclusion_proportion": f"{self.inclusion_proportion:.6g}",
            "mmms": _fmt(self.mmms), "rsd": _fmt(self.rsd), "failures": self.failures,
            "wall_time_s": f"{self.wall_time:.3f}",
        }

    def to_json(self):
        """JSON-ready mirror without timing, so reruns are byte-identical."""
        return {
            "method": self.method,
            "scenario": self.scenario.to_dict(),
            "reps": self.reps,
            "inclusion_proportion": self.inclusion_proportion,
            "min_model_sizes": self.min_model_sizes,
            "mmms": None if math.isnan(self.mmms) else self.mmms,
            "rsd": None if math.isnan(self.rsd) else self.rsd,
            "failures": self.failures,
            "replications": self.details,
        }


def _fmt(x):
    return "" if math.isnan(x) else f"{x:.6g}"


@dataclass(frozen=True)
class RunOptions:
    """Selection settings shared by all methods in a run.

    ``model_size=None`` means n - 1, the convention for the inclusion tables.
    Iterative methods use the same size as their budget and pad to it.
    """

    model_size: int = None
    max_rounds: int = 5
    iterative_model: str = "linear"

    def size_for(self, n, p):
        d = n - 1 if self.model_size is None else int(self.model_size)
        return max(1, min(d, p))


def _rule_size(rule, opts, n, p):
    if rule is not None and rule.kind == "top_d":
        return min(rule.d, p)
    return opts.size_for(n, p)


def _one_rep(cfg_dict, methods, rule, opts, rep):
    cfg = ScenarioConfig(**cfg_dict)
    inst = generate(cfg, rep)
    d = inst.dataset
    truth = inst.true_support
    size = _rule_size(rule, opts, d.n, d.p)
    out = {}
    for m in methods:
        t0 = time.perf_counter()
        rec = {"rep": rep, "included": False, "min_model_size": None, "selected": [], "error": None}
        try:
            if m in SCREEN_METHODS:
                scores = compute_scores(d, m)
                sel = select(scores, rule if rule is not None else ThresholdRule.top(size))
                rec["min_model_size"] = minimum_model_size(scores, truth)
            else:
                icfg = IterativeConfig(model_kind=opts.iterative_model, size_budget=min(size, d.n - 1),
                                       max_rounds=opts.max_rounds, fill_to_budget=True,
                                       comparator="rrcs" if m == "irrcs" else "sis")
                sel, trace = (irrcs if m == "irrcs" else isis)(d, icfg)
                rec["stop_reason"] = trace.stop_reason
                if trace.stop_reason == "refit_failed":
                    raise RuntimeError(trace.error)
            rec["selected"] = [int(k) for k in sel]
            rec["included"] = bool(set(truth.tolist()) <= set(rec["selected"]))
        except Exception as exc:  # noqa: BLE001 - failures are recorded per replication
            rec["error"] = f"{type(exc).__name__}: {exc}"
        out[m] = (rec, time.perf_counter() - t0)
    return out


def _chunk(args):
    cfg_dict, methods, rule, opts, reps = args
    return [(r, _one_rep(cfg_dict, methods, rule, opts, r)) for r in reps]


def run_scenario(cfg: ScenarioConfig, methods, reps, rule: ThresholdRule = None, parallelism=1,
                 options: RunOptions = None):
    """Run ``reps`` replications of ``cfg`` and summarize each method.

    Failed replications count as non-inclusions and are left out of the
    MMMS/RSD computation; their number is reported in ``failures``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    methods = list(methods)
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}")
    opts = options or RunOptions()
    cfg_dict = cfg.to_dict()
    parallelism = max(1, int(parallelism))
    rep_ids = list(range(reps))
    if parallelism == 1:
        results = _chunk((cfg_dict, methods, rule, opts, rep_ids))
    else:
        chunks = [rep_ids[k::parallelism] for k in range(parallelism)]
        chunks = [c for c in chunks if c]
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=len(chunks), mp_context=ctx) as ex:
            results = [x for part in ex.map(_chunk, [(cfg_dict, methods, rule, opts, c) for c in chunks])
                       for x in part]
    results.sort(key=lambda t: t[0])

    summaries = []
    for m in methods:
        recs = [res[m][0] for _, res in results]
        wall = float(sum(res[m][1] for _, res in results))
        failures = sum(r["error"] is not None for r in recs)
        sizes = [r["min_model_size"] for r in recs if r["min_model_size"] is not None and r["error"] is None]
        mmms, rsd = mmms_rsd(sizes) if sizes else (float("nan"), float("nan"))
        incl = sum(r["included"] for r in recs) / reps
        summaries.append(ReplicationSummary(m, cfg, reps, incl, sizes, mmms, rsd, wall, failures, recs))
    return summaries


def write_csv(summaries, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for s in summaries:
            w.writerow(s.csv_row())


def write_json(summaries, path, meta=None):
    doc = {"meta": meta or {}, "results": [s.to_json() for s in summaries]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def default_threads():
    env = os.environ.get("RANKSCREEN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
