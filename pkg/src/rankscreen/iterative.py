"""Iterative screening: IRRCS and its Pearson analogue ISIS.

Each round screens the columns outside the accumulated model on a
residual-type quantity, fits a penalized model to pick the round's subset,
and adds that subset to the union. Round sets are disjoint by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .estimation import FitResult, SmoothingSpec, select_lambda_bic
from .penalties import PenaltySpec
from .screening import Dataset, default_model_size, rank_order, rrcs_scores, sis_scores

MODEL_KINDS = ("linear", "transformation", "logistic")
STOP_REASONS = ("budget_reached", "max_rounds", "no_new_variables", "refit_failed")


@dataclass(frozen=True)
class IterativeConfig:
    """Settings for :func:`irrcs` / :func:`isis`.

    ``per_round_screen_size`` and ``size_budget`` default to [n / log n] and
    n - 1 when left as ``None``. ``loss`` is the linear refit loss; ``None``
    means Huber for the rank comparator and least squares for Pearson.
    ``fill_to_budget`` pads the final set with the best remaining residual
    scores until it has ``size_budget`` members.

    ``refit_scope`` controls the fit after round 1. ``"residual"`` regresses
    the current residual y* on the newly screened columns only and subtracts
    that fit from y* (linear models only). ``"joint"`` refits y on the old
    union plus the newly screened columns and keeps the new part of its
    support. ``None`` picks residual for linear models, joint otherwise.
    """

    model_kind: str = "linear"
    per_round_screen_size: int = None
    size_budget: int = None
    max_rounds: int = 5
    penalty: str = "SCAD"
    comparator: str = "rrcs"
    loss: str = None
    fill_to_budget: bool = False
    refit_scope: str = None

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.comparator not in ("rrcs", "sis"):
            raise ValueError(f"unknown comparator {self.comparator!r}")
        if self.per_round_screen_size is not None and self.per_round_screen_size < 1:
            raise ValueError("per_round_screen_size must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.loss not in (None, "least_squares", "huber"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.refit_scope not in (None, "joint", "residual"):
            raise ValueError(f"unknown refit scope {self.refit_scope!r}")
        if self.refit_scope == "residual" and self.model_kind != "linear":
            raise ValueError("residual refit scope needs model_kind='linear'")
        PenaltySpec(self.penalty)

    def resolve(self, n, p):
        """(per-round size, budget) for a data set with n rows and p columns."""
        budget = n - 1 if self.size_budget is None else int(self.size_budget)
        if not 1 <= budget < n:
            raise ValueError(f"size_budget must lie in [1, n); got {budget} with n={n}")
        d1 = default_model_size(max(n, 3)) if self.per_round_screen_size is None else int(self.per_round_screen_size)
        return min(d1, budget, p), min(budget, p)

    @property
    def scope(self):
        if self.refit_scope is not None:
            return self.refit_scope
        return "residual" if self.model_kind == "linear" else "joint"

    @property
    def refit_model(self):
        if self.model_kind == "transformation":
            return "psmrc"
        if self.model_kind == "logistic":
            return "logistic"
        if self.loss is not None:
            return self.loss
        return "huber" if self.comparator == "rrcs" else "least_squares"


@dataclass
class RoundRecord:
    screened: np.ndarray
    refit_columns: np.ndarray
    fit: FitResult
    new: np.ndarray
    union: np.ndarray


@dataclass
class IterationTrace:
    rounds: list = field(default_factory=list)
    stop_reason: str = None
    error: str = None
    padded: np.ndarray = None


def _inactive(p, active):
    mask = np.ones(p, dtype=bool)
    mask[np.asarray(active, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def _full_beta(fit: FitResult, active, p):
    active = np.asarray(active, dtype=np.int64)
    beta = np.asarray(fit.beta, dtype=np.float64)
    if beta.size == p:
        return beta
    if beta.size != active.size:
        raise ValueError("fitted beta does not match the active set")
    out = np.zeros(p)
    out[active] = beta
    return out


def residual_rank_scores_linear(d: Dataset, fitted: FitResult, active) -> np.ndarray:
    """rrcs scores of every inactive column against y* = y - fitted values.

    ``fitted.beta`` is either a p-vector or aligned with ``active``. Scores
    are returned for the inactive columns in increasing index order.
    """
    beta = _full_beta(fitted, active, d.p)
    ystar = d.y - fitted.intercept - d.X @ beta
    cols = _inactive(d.p, active)
    return rrcs_scores(Dataset(d.X[:, cols], ystar))


def residual_pearson_scores_linear(d: Dataset, fitted: FitResult, active) -> np.ndarray:
    beta = _full_beta(fitted, active, d.p)
    ystar = d.y - fitted.intercept - d.X @ beta
    cols = _inactive(d.p, active)
    return sis_scores(Dataset(d.X[:, cols], ystar))


def residual_rank_scores_transformation(d: Dataset, fitted: FitResult, active) -> np.ndarray:
    """Bracket-difference omega for the transformation model.

    omega_l = sum_{i != j} [I(Y_i < Y_j) - I(t_i < t_j)] I(X_il < X_jl) / (n(n-1)) - 1/4
    with t the fitted index. The sum splits into two strict concordance
    counts, so it is evaluated exactly in integers.
    """
    beta = _full_beta(fitted, active, d.p)
    index = d.X @ beta
    cols = _inactive(d.p, active)
    Xc = d.X[:, cols]
    c_y = _kernels.concordant_columns(Xc, d.y)
    c_t = _kernels.concordant_columns(Xc, index)
    n = d.n
    nn = np.int64(n) * np.int64(n - 1)
    num = 4 * (c_y.astype(np.int64) - c_t.astype(np.int64)) - nn
    return num / (4.0 * float(nn))


def _initial_scores(d: Dataset, comparator):
    return rrcs_scores(d) if comparator == "rrcs" else sis_scores(d)


def _refit(d: Dataset, cols, cfg: IterativeConfig, y=None):
    sub = d.subset(cols)
    if y is not None:
        sub = sub.with_response(y)
    model = cfg.refit_model
    if model == "psmrc":
        init = rrcs_scores(sub)
        if not np.any(init):
            init = np.ones(cols.size)
        _, fit = select_lambda_bic(sub, cfg.penalty, "psmrc", init=init, s=SmoothingSpec(), return_fit=True)
    else:
        _, fit = select_lambda_bic(sub, cfg.penalty, model, return_fit=True)
    return fit


def _round_scores(d: Dataset, fit, union, cfg: IterativeConfig):
    if cfg.model_kind == "logistic":
        cols = _inactive(d.p, union)
        scores = rrcs_scores(d.subset(cols)) if cfg.comparator == "rrcs" else sis_scores(d.subset(cols))
        return scores
    if cfg.model_kind == "transformation":
        return residual_rank_scores_transformation(d, fit, union)
    if cfg.comparator == "rrcs":
        return residual_rank_scores_linear(d, fit, union)
    return residual_pearson_scores_linear(d, fit, union)


def _iterate(d: Dataset, cfg: IterativeConfig):
    d1, budget = cfg.resolve(d.n, d.p)
    trace = IterationTrace()
    union = np.zeros(0, dtype=np.int64)
    fit_full = None
    ystar = d.y
    scores = _initial_scores(d, cfg.comparator)
    cand = np.arange(d.p)
    for k in range(cfg.max_rounds):
        if k > 0:
            cand = _inactive(d.p, union)
            if cand.size == 0:
                trace.stop_reason = "budget_reached"
                break
            scores = _round_scores(d, fit_full, union, cfg)
        screened = cand[rank_order(scores)[:min(d1, cand.size)]]
        residual = cfg.scope == "residual" and k > 0
        cols = screened if residual else np.concatenate([union, screened])
        try:
            fit = _refit(d, cols, cfg, y=ystar if residual else None)
        except Exception as exc:  # noqa: BLE001 - any refit failure aborts the round
            trace.stop_reason = "refit_failed"
            trace.error = f"{type(exc).__name__}: {exc}"
            break
        support = cols[fit.support]
        known = set(union.tolist())
        new = np.array([j for j in support if j not in known], dtype=np.int64)
        if new.size:
            # keep screening order so truncation drops the weakest
            pos = {int(j): i for i, j in enumerate(screened)}
            new = np.array(sorted(new, key=lambda j: pos.get(int(j), -1)), dtype=np.int64)
            new = new[: budget - union.size]
        beta = np.zeros(d.p)
        beta[cols] = fit.beta
        if residual:
            # accumulate: the working fit is y - ystar_new
            ystar = ystar - fit.intercept - d.X @ beta
            beta = fit_full.beta + beta
            intercept = float(np.mean(d.y - ystar - d.X @ beta))
        else:
            intercept = fit.intercept
            ystar = d.y - intercept - d.X @ beta
        fit_full = FitResult(beta, np.flatnonzero(beta), fit.objective_trace, fit.converged,
                             fit.iterations, intercept, fit.lam, fit.objective, fit.flags)
        union = np.concatenate([union, new])
        trace.rounds.append(RoundRecord(screened, cols, fit, new, union.copy()))
        if new.size == 0:
            trace.stop_reason = "no_new_variables"
            break
        if union.size >= budget:
            trace.stop_reason = "budget_reached"
            break
    else:
        trace.stop_reason = "max_rounds"

    if cfg.fill_to_budget and union.size < budget and trace.stop_reason != "refit_failed":
        cand = _inactive(d.p, union)
        if fit_full is None or union.size == 0:
            extra = _initial_scores(d.subset(cand), cfg.comparator)
        else:
            extra = _round_scores(d, fit_full, union, cfg)
        pad = cand[rank_order(extra)[: budget - union.size]]
        trace.padded = pad
        union = np.concatenate([union, pad])
    return union, trace


def irrcs(d: Dataset, cfg: IterativeConfig = None):
    """Iterative robust rank correlation screening; returns (indices, trace)."""
    cfg = cfg or IterativeConfig()
    if cfg.comparator != "rrcs":
        cfg = IterativeConfig(**{**cfg.__dict__, "comparator": "rrcs"})
    return _iterate(d, cfg)


def isis(d: Dataset, cfg: IterativeConfig = None):
    """Pearson-based iterative screening with least-squares style refits."""
    cfg = cfg or IterativeConfig(comparator="sis")
    if cfg.comparator != "sis":
        cfg = IterativeConfig(**{**cfg.__dict__, "comparator": "sis"})
    return _iterate(d, cfg)
