"""Pointwise densities of the general failure rate model.

The hazard is ``r(t) = a + b * t**(theta - 1)``. The pair ``(a, b)`` carries a
Farlie-Gumbel-Morgenstern prior with exponential marginals of rates
``lambda1`` and ``lambda2``. Every function here accepts scalars or numpy
arrays for ``t`` and broadcasts.

Exponentials of large negative arguments are evaluated directly and may
underflow to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class ModelConfig:
    """Known hyperparameters: shape ``theta``, prior rates and FGM ``rho``."""

    theta: float
    lambda1: float
    lambda2: float
    rho: float = 0.0

    def __post_init__(self):
        for name in ("theta", "lambda1", "lambda2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if not (-1.0 <= self.rho <= 1.0):
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho!r}")

    def replace(self, **changes) -> "ModelConfig":
        fields = dict(theta=self.theta, lambda1=self.lambda1, lambda2=self.lambda2, rho=self.rho)
        fields.update(changes)
        return ModelConfig(**fields)


@dataclass(frozen=True)
class ParamPair:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise ConfigError(f"a and b must be nonnegative, got a={self.a!r}, b={self.b!r}")
        if not self.a + self.b > 0:
            raise ConfigError("a + b must be positive; the hazard would vanish identically")


def _check_time(theta: float, t, allow_zero: bool = True) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("lifetimes must be nonnegative")
    if np.any(t == 0) and (theta < 1 or not allow_zero):
        raise DomainError(f"t = 0 is outside the domain for theta = {theta} (t**(theta-1) diverges)")
    return t


def _out(x):
    return x.item() if np.ndim(x) == 0 else x


def hazard(p: ParamPair, theta: float, t):
    """Failure rate ``a + b * t**(theta - 1)``.

    ``t = 0`` is accepted only for ``theta >= 1``.
    """
    t = _check_time(theta, t)
    return _out(p.a + p.b * t ** (theta - 1.0))


def cumulative_hazard(p: ParamPair, theta: float, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("lifetimes must be nonnegative")
    return _out(p.a * t + p.b * t**theta / theta)


def survival(p: ParamPair, theta: float, t):
    """Reliability ``exp(-(a t + b t**theta / theta))``; equals 1 at ``t = 0``."""
    return _out(np.exp(-np.asarray(cumulative_hazard(p, theta, t))))


def lifetime_pdf(p: ParamPair, theta: float, t):
    """Conditional lifetime density given ``(a, b)``: hazard times survival."""
    return _out(np.asarray(hazard(p, theta, t)) * np.asarray(survival(p, theta, t)))


def prior_density(cfg: ModelConfig, p: ParamPair | None = None, *, a=None, b=None):
    """FGM bivariate exponential prior density of ``(a, b)``.

    Either pass a :class:`ParamPair` or arrays through ``a=`` and ``b=``
    (array form is used by the quadrature tests and skips the pair checks).
    """
    if p is not None:
        a, b = p.a, p.b
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    l1, l2 = cfg.lambda1, cfg.lambda2
    ea = np.exp(-l1 * a)
    eb = np.exp(-l2 * b)
    base = l1 * l2 * ea * eb
    correction = l1 * l2 * cfg.rho * (2 * ea * ea - ea) * (2 * eb * eb - eb)
    return _out(base + correction)


def marginal_integrals(cfg: ModelConfig, t):
    """Closed forms of the four integrals ``I1..I4`` behind ``f_T``.

    ``I(p, q)`` integrates ``(a + b t^(theta-1)) exp(-(a t + b t^theta/theta))``
    against ``exp(-p*lambda1*a - q*lambda2*b)``; the pairs are
    ``I1=(1,1)``, ``I2=(2,2)``, ``I3=(1,2)``, ``I4=(2,1)``.
    """
    theta = cfg.theta
    t = _check_time(theta, t)
    t_pow = t**theta
    t_pm1 = t ** (theta - 1.0)

    def integral(p, q):
        u = t + p * cfg.lambda1
        w = t_pow + q * theta * cfg.lambda2
        return theta / (u * u * w) + theta**2 * t_pm1 / (u * w * w)

    return integral(1, 1), integral(2, 2), integral(1, 2), integral(2, 1)


def marginal_lifetime_pdf_from_integrals(cfg: ModelConfig, t):
    """``f_T`` assembled as ``l1*l2*(I1 + rho*(4 I2 - 2 I3 - 2 I4 + I1))``."""
    i1, i2, i3, i4 = marginal_integrals(cfg, t)
    l12 = cfg.lambda1 * cfg.lambda2
    return _out(l12 * (i1 + cfg.rho * (4 * i2 - 2 * i3 - 2 * i4 + i1)))


def marginal_lifetime_pdf(cfg: ModelConfig, t):
    """Marginal lifetime density ``f_T(t)`` with ``(a, b)`` integrated out.

    Uses the simplified two-term closed form. With ``rho = 0`` it reduces to
    ``l1*l2*I1`` exactly (the correction term is multiplied by ``rho``).
    """
    theta, l1, l2 = cfg.theta, cfg.lambda1, cfg.lambda2
    t = _check_time(theta, t)
    tp = t**theta
    tpm1 = t ** (theta - 1.0)
    l12 = l1 * l2

    # t^(theta-1) written out, so no 1/t and t = 0 stays finite for theta >= 1
    main = (
        l12 * theta * ((theta + 1) * tp + theta * l1 * tpm1 + theta * l2)
        / ((l1 + t) ** 2 * (tp + theta * l2) ** 2)
    )
    if cfg.rho == 0:
        return _out(main)

    w1 = l2 * theta + tp
    w2 = 2 * l2 * theta + tp
    u1 = l1 + t
    u2 = 2 * l1 + t
    bracket = (t * t - 2 * l1 * l1) / (u2 * u1) + theta * (tp * tp - 2 * (l2 * theta) ** 2) / (w2 * w1)
    correction = cfg.rho * l12 * theta * tp / (w2 * w1 * u2 * u1) * bracket
    return _out(main + correction)


def log_marginal_lifetime_pdf(cfg: ModelConfig, t):
    """Log of ``f_T``; used by the sampler, where underflow must read as -inf."""
    with np.errstate(divide="ignore"):
        return _out(np.log(np.asarray(marginal_lifetime_pdf(cfg, t))))


def plugin_reliability(est_a: float, est_b: float, theta: float, t):
    """Estimated reliability at ``t`` from point estimates of ``a`` and ``b``."""
    if est_a < 0 or est_b < 0:
        raise DomainError("estimates must be nonnegative")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("lifetimes must be nonnegative")
    return _out(np.exp(-(est_a * t + est_b * t**theta / theta)))


def plugin_hazard(est_a: float, est_b: float, theta: float, t):
    """Estimated failure rate at ``t`` from point estimates."""
    if est_a < 0 or est_b < 0:
        raise DomainError("estimates must be nonnegative")
    t = _check_time(theta, t)
    return _out(est_a + est_b * t ** (theta - 1.0))
