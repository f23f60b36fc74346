"""Closed-form posterior quantities and the six Bayes estimators.

Every posterior integral reduces to a weighted sum

    Phi(l, m, p, q) = sum_j M_j * Gamma(r-j+l) / A_p**(r-j+l) * Gamma(j+m) / B_q**(j+m)

with ``A_p = S1 + p*lambda1 (+ shift1)`` and ``B_q = S2/theta + q*lambda2
(+ shift2)``. The FGM prior contributes four such sums per quantity,
combined as ``(1+rho)*Phi11 + 4 rho Phi22 - 2 rho Phi12 - 2 rho Phi21``.
All sums are formed term-by-term in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Mapping

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, CurvatureTooNegative, Divergent, EntropyRiskUndefined, NonPositiveMarginal
from .model import ModelConfig, ParamPair
from .sample import CensoredSample, SummaryStats, summarize

ENTROPY_MODES = ("strict", "drop")
ESTIMATORS = ("a_bs", "b_bs", "a_bl", "b_bl", "a_be", "b_be")

# FGM expansion: (coefficient as function of rho, p, q)
_FGM_TERMS = (
    (lambda rho: 1.0 + rho, 1, 1),
    (lambda rho: 4.0 * rho, 2, 2),
    (lambda rho: -2.0 * rho, 1, 2),
    (lambda rho: -2.0 * rho, 2, 1),
)


def normalize_entropy_mode(mode: str) -> str:
    key = mode.strip().lower()
    if key in ("drop", "drop-divergent", "drop_divergent"):
        return "drop"
    if key == "strict":
        return "strict"
    raise ConfigError(f"unknown entropy mode {mode!r}; expected 'strict' or 'drop'")


@dataclass(frozen=True)
class LossConstants:
    """Linex curvatures ``c1, c2`` and the per-component loss weights."""

    c1: float = 1.0
    c2: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    m1: float = 1.0
    m2: float = 1.0

    def __post_init__(self):
        if self.c1 == 0 or self.c2 == 0 or not (math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise ConfigError("linex curvatures c1, c2 must be finite and nonzero")
        for name in ("k1", "k2", "l1", "l2", "m1", "m2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"loss weight {name} must be positive, got {value!r}")


@dataclass(frozen=True)
class PosteriorContext:
    cfg: ModelConfig
    stats: SummaryStats
    n: int
    r: int
    times: tuple[float, ...] = field(repr=False)

    def __post_init__(self):
        if self.stats.theta != self.cfg.theta:
            raise ConfigError("summary statistics were computed for a different theta")
        if self.stats.r != self.r:
            raise ConfigError("summary statistics do not match r")
        for p in (1, 2):
            if not self.rate_a(p) > 0 or not self.rate_b(p) > 0:
                raise ConfigError("posterior rates must be positive")

    @classmethod
    def from_sample(cls, cfg: ModelConfig, sample: CensoredSample) -> "PosteriorContext":
        stats = summarize(sample, cfg.theta)
        return cls(cfg=cfg, stats=stats, n=sample.n, r=sample.r, times=sample.times)

    def rate_a(self, p: int, shift: float = 0.0) -> float:
        return self.stats.s1 + p * self.cfg.lambda1 + shift

    def rate_b(self, q: int, shift: float = 0.0) -> float:
        return self.stats.s2 / self.cfg.theta + q * self.cfg.lambda2 + shift


def _phi_terms(ctx: PosteriorContext, l: int, m: int, p: int, q: int, shift1: float, shift2: float,
               drop_divergent: bool) -> np.ndarray:
    rate_a = ctx.rate_a(p, shift1)
    rate_b = ctx.rate_b(q, shift2)
    if rate_a <= 0 or rate_b <= 0:
        raise CurvatureTooNegative(
            f"shifted rates must be positive (got {rate_a:.6g}, {rate_b:.6g}); reduce |c|"
        )
    j = np.arange(ctx.r + 1)
    k_a = ctx.r - j + l
    k_b = j + m
    finite = (k_a > 0) & (k_b > 0)
    if not finite.all() and not drop_divergent:
        bad = int(j[~finite][0])
        raise Divergent(f"Phi({l},{m},{p},{q}) contains Gamma(0) at j={bad}")
    j, k_a, k_b = j[finite], k_a[finite], k_b[finite]
    return (
        ctx.stats.log_m[j]
        + gammaln(k_a) - k_a * math.log(rate_a)
        + gammaln(k_b) - k_b * math.log(rate_b)
    )


def log_phi(ctx: PosteriorContext, l: int, m: int, p: int, q: int,
            shift1: float = 0.0, shift2: float = 0.0, *, drop_divergent: bool = False) -> float:
    """Natural log of ``Phi(l, m, p, q)`` with optional additive rate shifts.

    ``shift1 = c1`` gives ``Phi*`` and ``shift2 = c2`` gives ``Phi**``.
    Raises :class:`Divergent` when a ``Gamma(0)`` term is present, unless
    ``drop_divergent`` is set, in which case those terms are omitted.
    """
    if l < 0 or m < 0 or p not in (1, 2) or q not in (1, 2):
        raise ValueError("need l, m >= 0 and p, q in {1, 2}")
    terms = _phi_terms(ctx, l, m, p, q, shift1, shift2, drop_divergent)
    if terms.size == 0:
        return -math.inf
    return float(logsumexp(terms))


def phi(ctx: PosteriorContext, l: int, m: int, p: int, q: int,
        shift1: float = 0.0, shift2: float = 0.0, *, drop_divergent: bool = False) -> float:
    return float(np.exp(log_phi(ctx, l, m, p, q, shift1, shift2, drop_divergent=drop_divergent)))


def log_bracket(ctx: PosteriorContext, l: int, m: int, shift1: float = 0.0, shift2: float = 0.0,
                *, drop_divergent: bool = False) -> float:
    """Log of the FGM combination of the four ``Phi(l, m, p, q)``."""
    rho = ctx.cfg.rho
    if rho == 0:
        return log_phi(ctx, l, m, 1, 1, shift1, shift2, drop_divergent=drop_divergent)
    logs = np.array([log_phi(ctx, l, m, p, q, shift1, shift2, drop_divergent=drop_divergent)
                     for _, p, q in _FGM_TERMS])
    coef = np.array([c(rho) for c, _, _ in _FGM_TERMS])
    ref = logs.max()
    total = float(np.dot(coef, np.exp(logs - ref)))
    if not total > 0:
        raise NonPositiveMarginal(f"FGM bracket for Phi({l},{m},.,.) is not positive ({total!r})")
    return ref + math.log(total)


def log_normalizer(ctx: PosteriorContext) -> float:
    """``log K``, where ``1/K`` is the marginal density of the sample."""
    return -(math.log(ctx.cfg.lambda1 * ctx.cfg.lambda2) + log_bracket(ctx, 1, 1))


def normalizer(ctx: PosteriorContext) -> float:
    return math.exp(log_normalizer(ctx))


def posterior_density(ctx: PosteriorContext, p: ParamPair | None = None, *, a=None, b=None):
    """Joint posterior density of ``(a, b)`` given the sample."""
    if p is not None:
        a, b = p.a, p.b
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    cfg, r = ctx.cfg, ctx.r
    j = np.arange(r + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.log(a)[..., None]
        lb = np.log(b)[..., None]
        pow_a = np.where(r - j == 0, 0.0, (r - j) * la)
        pow_b = np.where(j == 0, 0.0, j * lb)
        log_poly = logsumexp(ctx.stats.log_m + pow_a + pow_b, axis=-1)
    rho = cfg.rho
    ea = np.exp(-cfg.lambda1 * a)
    eb = np.exp(-cfg.lambda2 * b)
    fgm = (1.0 + rho) + 4.0 * rho * ea * eb - 2.0 * rho * eb - 2.0 * rho * ea
    log_base = (log_normalizer(ctx) + math.log(cfg.lambda1 * cfg.lambda2) + log_poly
                - a * ctx.rate_a(1) - b * ctx.rate_b(1))
    out = np.exp(log_base) * fgm
    return out.item() if out.ndim == 0 else out


def estimate_squared_error(ctx: PosteriorContext) -> tuple[float, float]:
    """Posterior means of ``a`` and ``b``."""
    base = log_bracket(ctx, 1, 1)
    return math.exp(log_bracket(ctx, 2, 1) - base), math.exp(log_bracket(ctx, 1, 2) - base)


def _check_curvature(ctx: PosteriorContext, loss: LossConstants) -> None:
    if not loss.c1 > -ctx.rate_a(1):
        raise CurvatureTooNegative(f"c1 must exceed -(S1 + lambda1) = {-ctx.rate_a(1):.6g}")
    if not loss.c2 > -ctx.rate_b(1):
        raise CurvatureTooNegative(f"c2 must exceed -(S2/theta + lambda2) = {-ctx.rate_b(1):.6g}")


def _log_shift_ratio(ctx: PosteriorContext, shift1: float, shift2: float) -> float:
    """``log(bracket(1,1; shifts) / bracket(1,1))`` without cancellation.

    Shifting a rate multiplies each term by ``exp(delta)`` with
    ``delta = -k*log1p(shift/rate)``, so the ratio minus one is a weighted
    sum of ``expm1(delta)``. This keeps full relative precision as the
    shifts go to 0, where the linex rule approaches the posterior mean;
    large shifts fall back to the difference of log brackets.
    """
    terms = [(1.0, 1, 1)] if ctx.cfg.rho == 0 else [(c(ctx.cfg.rho), p, q) for c, p, q in _FGM_TERMS]
    j = np.arange(ctx.r + 1)
    k_a = ctx.r - j + 1
    k_b = j + 1
    logs, deltas, coefs = [], [], []
    for coef, p, q in terms:
        logs.append(_phi_terms(ctx, 1, 1, p, q, 0.0, 0.0, False))
        da = -k_a * math.log1p(shift1 / ctx.rate_a(p)) if shift1 else np.zeros(j.size)
        db = -k_b * math.log1p(shift2 / ctx.rate_b(q)) if shift2 else np.zeros(j.size)
        deltas.append(da + db)
        coefs.append(np.full(j.size, coef))
    logs, deltas, coefs = np.concatenate(logs), np.concatenate(deltas), np.concatenate(coefs)
    w = coefs * np.exp(logs - logs.max())
    excess = float(np.dot(w, np.expm1(deltas)) / w.sum())
    if excess > -0.5:
        return math.log1p(excess)
    # far from 1 the plain difference of logs loses nothing
    return log_bracket(ctx, 1, 1, shift1, shift2) - log_bracket(ctx, 1, 1)


def estimate_linex(ctx: PosteriorContext, loss: LossConstants) -> tuple[float, float]:
    """Linex Bayes rules ``-(1/c) log E[exp(-c psi)]`` for both components."""
    _check_curvature(ctx, loss)
    log_mgf_a = _log_shift_ratio(ctx, loss.c1, 0.0)
    log_mgf_b = _log_shift_ratio(ctx, 0.0, loss.c2)
    return -log_mgf_a / loss.c1, -log_mgf_b / loss.c2


def estimate_entropy(ctx: PosteriorContext, mode: str = "strict") -> tuple[float, float, dict[str, bool]]:
    """Entropy-loss Bayes rules ``1 / E[1/psi]``.

    ``E[1/a]`` carries a ``Gamma(0)`` term at ``j = r`` and ``E[1/b]`` one at
    ``j = 0``; both are infinite for any sample. ``strict`` reports the
    resulting zero estimates, ``drop`` omits the offending terms. The flag
    is set in both modes.
    """
    mode = normalize_entropy_mode(mode)
    flags = {"a_be": True, "b_be": True}
    if mode == "strict":
        return 0.0, 0.0, flags
    base = log_bracket(ctx, 1, 1)
    a_be = math.exp(base - log_bracket(ctx, 0, 1, drop_divergent=True))
    b_be = math.exp(base - log_bracket(ctx, 1, 0, drop_divergent=True))
    return a_be, b_be, flags


@dataclass(frozen=True)
class EstimateSet:
    a_bs: float
    b_bs: float
    a_bl: float
    b_bl: float
    a_be: float
    b_be: float
    loss: LossConstants
    divergence_flags: Mapping[str, bool] = field(default_factory=dict)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in ESTIMATORS)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ESTIMATORS}


def estimate_all(ctx: PosteriorContext, loss: LossConstants, entropy_mode: str = "strict") -> EstimateSet:
    a_bs, b_bs = estimate_squared_error(ctx)
    a_bl, b_bl = estimate_linex(ctx, loss)
    a_be, b_be, flags = estimate_entropy(ctx, entropy_mode)
    return EstimateSet(a_bs, b_bs, a_bl, b_bl, a_be, b_be, loss=loss, divergence_flags=flags)


def estimate(sample: CensoredSample, cfg: ModelConfig, loss: LossConstants,
             entropy_mode: str = "strict") -> EstimateSet:
    """All six estimates for one censored sample."""
    return estimate_all(PosteriorContext.from_sample(cfg, sample), loss, entropy_mode)


# Loss functions, written as L(true, estimate).

def squared_error_loss(a, b, a_hat, b_hat, loss: LossConstants):
    return loss.k1 * (a - a_hat) ** 2 + loss.k2 * (b - b_hat) ** 2


def linex_loss(a, b, a_hat, b_hat, loss: LossConstants):
    da = loss.c1 * (np.asarray(a_hat) - a)
    db = loss.c2 * (np.asarray(b_hat) - b)
    return loss.l1 * (np.expm1(da) - da) + loss.l2 * (np.expm1(db) - db)


def entropy_loss(a, b, a_hat, b_hat, loss: LossConstants):
    """``m1 (x - ln x - 1) + m2 (y - ln y - 1)`` with ``x = a_hat/a``, ``y = b_hat/b``."""
    a_hat = np.asarray(a_hat, dtype=float)
    b_hat = np.asarray(b_hat, dtype=float)
    if np.any(a_hat <= 0) or np.any(b_hat <= 0) or np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise EntropyRiskUndefined("entropy loss needs strictly positive estimates")
    x = a_hat / a
    y = b_hat / b
    return loss.m1 * (x - np.log(x) - 1.0) + loss.m2 * (y - np.log(y) - 1.0)
