"""Seeded data generators for the simulation designs.

RNG scheme
----------
Every draw comes from ``numpy.random.Generator(numpy.random.Philox(seed))``,
a counter-based 64-bit generator. Replication ``r`` of a scenario with base
seed ``s`` uses stream seed ``s ^ r``. Both the algorithm and the XOR rule
are part of the public contract: golden-value tests depend on them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .screening import CATEGORICAL, CONTINUOUS, Dataset
from .stats import PairedSample

EXAMPLES = ("ex1", "ex2", "ex3_boxcox", "ex3_log", "ex4_logistic", "ex5_mixed")
NOISES = ("normal", "contaminated10", "t3")
BETA_PATTERNS = ("default", "1_1.3", "3_4", "3_-3")

EX3_BETA = (3.0, 1.5, 2.0)
# SCAD fit of the salary model: intercept, Female, PCJob, Edu1..4, JobGrd1..5, YrsExp, Age
EX5_COEF = (55.835, -0.624, 4.151, 0.0, -1.073, -0.914, 0.0,
            -24.643, -22.818, -18.803, -13.859, -7.770, 0.193, 0.0)


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def stream_seed(base_seed, rep):
    return int(base_seed) ^ int(rep)


@dataclass(frozen=True)
class ScenarioConfig:
    example: str = "ex1"
    p: int = 100
    n: int = 50
    rho: float = 0.0
    noise: str = "normal"
    lambda_boxcox: float = 0.5
    q: int = 15
    s: int = 3
    sigma: float = 1.0
    beta_pattern: str = "default"
    seed: int = 0

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.noise not in NOISES:
            raise ValueError(f"unknown noise {self.noise!r}")
        if self.beta_pattern not in BETA_PATTERNS:
            raise ValueError(f"unknown beta pattern {self.beta_pattern!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        min_p = {"ex1": 3, "ex2": 5, "ex3_boxcox": 3, "ex3_log": 3,
                 "ex4_logistic": max(self.s, 3), "ex5_mixed": 13}[self.example]
        if self.p < min_p:
            raise ValueError(f"{self.example} needs p >= {min_p}")
        if self.example == "ex4_logistic" and not (1 <= self.s <= self.p and 0 <= self.q <= self.p):
            raise ValueError("ex4 needs 1 <= s <= p and 0 <= q <= p")
        if self.example == "ex3_boxcox" and not self.lambda_boxcox > 0:
            raise ValueError("Box-Cox lambda must be positive")

    def to_dict(self):
        return asdict(self)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class GeneratedInstance:
    dataset: Dataset
    true_support: np.ndarray
    true_beta: np.ndarray
    latent: np.ndarray = None
    extra: dict = field(default_factory=dict)


def sample_equicorrelated_normal(n, p, rho, seed):
    """N(0, Sigma) rows with unit variances and common correlation rho.

    One-factor construction X_ij = sqrt(rho) W_i + sqrt(1 - rho) Z_ij.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    rng = make_rng(seed)
    w = rng.standard_normal(n)
    Z = rng.standard_normal((n, p))
    if rho == 0.0:
        return Z
    return math.sqrt(rho) * w[:, None] + math.sqrt(1.0 - rho) * Z


def sample_noise(kind, n, seed):
    rng = make_rng(seed)
    if kind == "normal":
        return rng.standard_normal(n)
    if kind == "contaminated10":
        eps = rng.standard_normal(n)
        mask = rng.random(n) < 0.1
        eps[mask] = rng.standard_cauchy(int(mask.sum()))
        return eps
    if kind == "t3":
        return rng.standard_t(3, n)
    raise ValueError(f"unknown noise kind {kind!r}")


def _instance(X, y, beta, kinds=None, latent=None, **extra):
    support = np.flatnonzero(beta)
    return GeneratedInstance(Dataset(X, y, kinds), support, beta, latent, extra)


def gen_example1(cfg: ScenarioConfig, seed=None) -> GeneratedInstance:
    """Linear model, beta = (5, 5, 5, 0, ...), equicorrelated normal design."""
    rng = make_rng(cfg.seed if seed is None else seed)
    X = sample_equicorrelated_normal(cfg.n, cfg.p, cfg.rho, rng)
    beta = np.zeros(cfg.p)
    beta[:3] = 5.0
    y = X @ beta + sample_noise(cfg.noise, cfg.n, rng)
    return _instance(X, y, beta)


def gen_example2(cfg: ScenarioConfig, seed=None) -> GeneratedInstance:
    """Y = 5X1 + 5X2 + 5X3 - 15 sqrt(rho) X4 + X5 + eps.

    X4 is the common factor, so corr(X4, Xj) = sqrt(rho) for j not in {4, 5}
    and corr(X4, Y) = 0. X5 is independent of everything else.
    """
    rng = make_rng(cfg.seed if seed is None else seed)
    n, p, rho = cfg.n, cfg.p, cfg.rho
    w = rng.standard_normal(n)
    Z = rng.standard_normal((n, p))
    X = math.sqrt(rho) * w[:, None] + math.sqrt(1.0 - rho) * Z
    X[:, 3] = w
    X[:, 4] = Z[:, 4]
    beta = np.zeros(p)
    beta[:5] = (5.0, 5.0, 5.0, -15.0 * math.sqrt(rho), 1.0)
    y = X @ beta + sample_noise(cfg.noise, n, rng)
    return _instance(X, y, beta)


def boxcox_transform(y, lam):
    """H(y) = (|y|^lam sgn(y) - 1) / lam."""
    return (np.abs(y) ** lam * np.sign(y) - 1.0) / lam


def boxcox_inverse(z, lam):
    v = lam * z + 1.0
    return np.sign(v) * np.abs(v) ** (1.0 / lam)


def gen_example3(cfg: ScenarioConfig, seed=None) -> GeneratedInstance:
    """Transformation model H(Y) = X beta + eps with beta = (3, 1.5, 2, 0, ...).

    ``true_beta`` is the unit-norm direction; ``latent`` holds H(Y).
    """
    rng = make_rng(cfg.seed if seed is None else seed)
    X = sample_equicorrelated_normal(cfg.n, cfg.p, cfg.rho, rng)
    beta = np.zeros(cfg.p)
    beta[:3] = EX3_BETA
    z = X @ beta + sample_noise(cfg.noise, cfg.n, rng)
    if cfg.example == "ex3_log":
        y = np.exp(z)
    else:
        y = boxcox_inverse(z, cfg.lambda_boxcox)
    return _instance(X, y, beta / np.linalg.norm(beta), latent=z)


def ex4_beta(s, pattern, p):
    if pattern == "default":
        pattern = "1_1.3"
    a, b = {"1_1.3": (1.0, 1.3), "3_4": (3.0, 4.0), "3_-3": (3.0, -3.0)}[pattern]
    beta = np.zeros(p)
    beta[:s] = [a if k % 2 == 0 else b for k in range(s)]
    return beta


def gen_example4(cfg: ScenarioConfig, seed=None) -> GeneratedInstance:
    """Logistic regression with mixed-tail predictors.

    X_j = (e_j + a_j e) / sqrt(1 + a_j^2), the first third of e_j normal, the
    second third Laplace(0, 1) and the rest a 50/50 mixture of N(-1, 1) and
    N(1, 0.5) (variance 0.5). a_j = sqrt(rho / (1 - rho)) for j < q, else 0.
    Columns are then standardized.
    """
    rng = make_rng(cfg.seed if seed is None else seed)
    n, p = cfg.n, cfg.p
    k1, k2 = p // 3, (2 * p) // 3
    E = np.empty((n, p))
    E[:, :k1] = rng.standard_normal((n, k1))
    E[:, k1:k2] = rng.laplace(0.0, 1.0, (n, k2 - k1))
    m = p - k2
    comp = rng.random((n, m)) < 0.5
    E[:, k2:] = np.where(comp, rng.normal(-1.0, 1.0, (n, m)), rng.normal(1.0, math.sqrt(0.5), (n, m)))
    e = rng.standard_normal(n)
    a = math.sqrt(cfg.rho / (1.0 - cfg.rho))
    if a > 0 and cfg.q > 0:
        E[:, : cfg.q] = (E[:, : cfg.q] + a * e[:, None]) / math.sqrt(1.0 + a * a)
    X = (E - E.mean(axis=0)) / E.std(axis=0)
    beta = ex4_beta(cfg.s, cfg.beta_pattern, p)
    eta = X @ beta
    prob = 0.5 * (1.0 + np.tanh(0.5 * eta))
    y = (rng.random(n) < prob).astype(np.float64)
    return _instance(X, y, beta)


def _ex5_named_block(n, rng):
    """Synthetic stand-in for the 13 bank covariates (not the real data).

    Female, PCJob, Edu dummies for levels 1-4 (level 5 baseline), JobGrade
    dummies for grades 1-5 (grade 6 baseline), YrsExp and Age.
    """
    female = (rng.random(n) < 0.6).astype(float)
    pcjob = (rng.random(n) < 0.1).astype(float)
    edu = rng.choice(5, size=n, p=[0.3, 0.15, 0.3, 0.1, 0.15])
    grade = rng.choice(6, size=n, p=[0.25, 0.2, 0.2, 0.15, 0.1, 0.1])
    yrs_exp = rng.uniform(1.0, 30.0, n)
    age = np.minimum(60.0, 20.0 + yrs_exp + rng.uniform(0.0, 15.0, n))
    cols = [female, pcjob]
    cols += [(edu == k).astype(float) for k in range(4)]
    cols += [(grade == k).astype(float) for k in range(5)]
    cols += [yrs_exp, age]
    return np.column_stack(cols)


def gen_example5(cfg: ScenarioConfig, seed=None) -> GeneratedInstance:
    """Mixed categorical/continuous linear model.

    Columns 1-13 are synthetic bank-like covariates with the published SCAD
    coefficients, columns 14..[2p/5] Bernoulli(p_i) with p_i ~ U[0.2, 0.8],
    the rest standard normal; noise is sigma * N(0, 1).
    """
    rng = make_rng(cfg.seed if seed is None else seed)
    n, p = cfg.n, cfg.p
    named = _ex5_named_block(n, rng)
    kb = max((2 * p) // 5, 13)
    probs = rng.uniform(0.2, 0.8, kb - 13)
    binary = (rng.random((n, kb - 13)) < probs).astype(float)
    normal = rng.standard_normal((n, p - kb))
    X = np.hstack([named, binary, normal])
    beta = np.zeros(p)
    beta[:13] = EX5_COEF[1:]
    y = EX5_COEF[0] + X @ beta + cfg.sigma * rng.standard_normal(n)
    kinds = [CATEGORICAL] * 11 + [CONTINUOUS] * 2 + [CATEGORICAL] * (kb - 13) + [CONTINUOUS] * (p - kb)
    return _instance(X, y, beta, kinds=tuple(kinds), intercept=EX5_COEF[0])


_GENERATORS = {
    "ex1": gen_example1,
    "ex2": gen_example2,
    "ex3_boxcox": gen_example3,
    "ex3_log": gen_example3,
    "ex4_logistic": gen_example4,
    "ex5_mixed": gen_example5,
}


def generate(cfg: ScenarioConfig, rep=0) -> GeneratedInstance:
    """Replication ``rep`` of the scenario, drawn from stream ``cfg.seed ^ rep``."""
    return _GENERATORS[cfg.example](cfg, seed=stream_seed(cfg.seed, rep))


def _quantile(margin):
    if margin is None:
        return None
    if hasattr(margin, "ppf"):
        return margin.ppf
    return margin


def sample_normal_copula(n, theta, margin_x=None, margin_y=None, seed=0) -> PairedSample:
    """(Q_x(Phi(U)), Q_y(Phi(V))) with (U, V) bivariate normal, corr theta.

    Margins are quantile functions (or frozen scipy distributions); ``None``
    keeps the standard normal margin.
    """
    if not abs(theta) < 1.0:
        raise ValueError("copula parameter must satisfy |theta| < 1")
    rng = make_rng(seed)
    u = rng.standard_normal(n)
    v = theta * u + math.sqrt(1.0 - theta * theta) * rng.standard_normal(n)
    qx, qy = _quantile(margin_x), _quantile(margin_y)
    x = u if qx is None else qx(ndtr(u))
    y = v if qy is None else qy(ndtr(v))
    return PairedSample(x, y)
