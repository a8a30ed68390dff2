"""Robust rank correlation screening for ultra-high-dimensional regression."""

from .stats import (
    ConcordanceCounts,
    DegenerateColumnError,
    PairedSample,
    brute_force_omega,
    concordance_counts,
    kendall_tau,
    omega_score,
    pearson,
)

__version__ = "0.1.0"
