"""Sparsity penalties p_lambda(t), t >= 0, and their derivatives in t."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("L1", "SCAD", "MCP")


@dataclass(frozen=True)
class PenaltySpec:
    family: str = "SCAD"
    lam: float = 0.0
    a: float = 3.7
    gamma_mcp: float = 3.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if self.family == "SCAD" and not self.a > 2:
            raise ValueError("SCAD needs a > 2")
        if self.family == "MCP" and not self.gamma_mcp > 1:
            raise ValueError("MCP needs gamma > 1")

    def with_lambda(self, lam):
        return PenaltySpec(self.family, float(lam), self.a, self.gamma_mcp)


def _check_t(t):
    t = np.asarray(t, dtype=np.float64)
    if (t < 0).any():
        raise ValueError("penalty argument must be non-negative")
    return t


def penalty_value(pen: PenaltySpec, t):
    t = _check_t(t)
    lam = pen.lam
    if pen.family == "L1":
        out = lam * t
    elif pen.family == "SCAD":
        a = pen.a
        mid = (2 * a * lam * t - t * t - lam * lam) / (2 * (a - 1))
        out = np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, lam * lam * (a + 1) / 2))
    else:
        g = pen.gamma_mcp
        out = np.where(t <= g * lam, lam * t - t * t / (2 * g), g * lam * lam / 2)
    return out if out.ndim else float(out)


def penalty_derivative(pen: PenaltySpec, t):
    """Right derivative in t; equals lambda at t = 0 for every family."""
    t = _check_t(t)
    lam = pen.lam
    if pen.family == "L1":
        out = np.full_like(t, lam)
    elif pen.family == "SCAD":
        a = pen.a
        if lam == 0:
            out = np.zeros_like(t)
        else:
            tail = lam * np.minimum(1.0, np.maximum(0.0, (a * lam - t) / ((a - 1) * lam)))
            out = np.where(t <= lam, lam, tail)
    else:
        out = np.maximum(0.0, lam - t / pen.gamma_mcp)
    return out if out.ndim else float(out)
