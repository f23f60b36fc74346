"""Brute-force validators: adaptive quadrature and subset enumeration.

Nothing here calls into the closed-form posterior code. Posterior
integrands are rebuilt from the raw failure times so that agreement with
:mod:`gfr_bayes.posterior` is evidence rather than tautology.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, DivergenceDetected, NonConvergence, TooLarge

ESP_MAX_LENGTH = 20


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for integrals over ``(0, inf)``.

    ``tail_cutoff_strategy="transform"`` maps ``t = scale * u / (1 - u)``
    onto ``u in (0, 1)``. ``"cutoff"`` integrates ``(0, cutoff)`` and adds
    ``tail_bound(cutoff)`` to the error estimate.
    """

    relative_tolerance: float = 1e-8
    max_subdivisions: int = 200
    absolute_tolerance: float = 0.0
    tail_cutoff_strategy: str = "transform"
    scale: float = 1.0
    cutoff: float | None = None
    tail_bound: Callable[[float], float] | None = None

    def __post_init__(self):
        if not self.relative_tolerance > 0:
            raise ConfigError("relative_tolerance must be positive")
        if not self.absolute_tolerance >= 0:
            raise ConfigError("absolute_tolerance must be nonnegative")
        if self.tail_cutoff_strategy not in ("transform", "cutoff"):
            raise ConfigError("tail_cutoff_strategy must be 'transform' or 'cutoff'")
        if self.tail_cutoff_strategy == "cutoff" and (self.cutoff is None or self.tail_bound is None):
            raise ConfigError("cutoff strategy needs both cutoff and tail_bound")

    def describe(self) -> str:
        if self.tail_cutoff_strategy == "transform":
            return f"transform t = {self.scale:g}*u/(1-u), rtol={self.relative_tolerance:g}"
        return f"cutoff at T={self.cutoff:g} with analytic tail bound, rtol={self.relative_tolerance:g}"


def _quad(f, lo, hi, spec: QuadratureSpec, points=None):
    value, err, info, *rest = integrate.quad(
        f, lo, hi, epsabs=spec.absolute_tolerance, epsrel=spec.relative_tolerance, limit=spec.max_subdivisions,
        points=points, full_output=1,
    )
    ier = 0 if not rest else 1
    # ier>0 comes back as an extra message element; only give up if the error is also large
    if ier and not err <= 10 * max(spec.relative_tolerance * abs(value), spec.absolute_tolerance):
        raise NonConvergence(f"quad failed on ({lo}, {hi}): {rest[0]!s:.120}")
    return value, err


def integrate_1d(f: Callable[[float], float], spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """Integral of ``f`` over ``(0, inf)`` and an error estimate."""
    spec = spec or QuadratureSpec()
    if spec.tail_cutoff_strategy == "cutoff":
        value, err = _quad(f, 0.0, spec.cutoff, spec)
        return value, err + abs(spec.tail_bound(spec.cutoff))
    s = spec.scale

    def g(u):
        if u >= 1.0:
            return 0.0
        one_minus = 1.0 - u
        return f(s * u / one_minus) * s / (one_minus * one_minus)

    return _quad(g, 0.0, 1.0, spec)


def integrate_2d(f: Callable[[float, float], float], spec: QuadratureSpec | None = None,
                 scales: tuple[float, float] = (1.0, 1.0), a_min: float = 0.0) -> tuple[float, float]:
    """Nested adaptive quadrature of ``f(a, b)`` over ``(a_min, inf) x (0, inf)``.

    Both axes use the ``u/(1-u)`` map with the given scales. Inner
    integrals get an absolute floor of 1e-30 so that far-tail slices,
    whose values sink into subnormal range, do not chase a relative
    tolerance they cannot reach; ``f`` should be scaled to be of order
    one near its peak for the floor to be negligible.
    """
    spec = spec or QuadratureSpec()
    sa, sb = scales
    u_min = a_min / (sa + a_min) if a_min > 0 else 0.0
    inner_spec = QuadratureSpec(spec.relative_tolerance * 1e-2, spec.max_subdivisions, absolute_tolerance=1e-30)
    inner_err = [0.0]

    def outer(vb):
        if vb >= 1.0:
            return 0.0
        wb = 1.0 - vb
        b = sb * vb / wb
        jac_b = sb / (wb * wb)

        def inner(va):
            if va >= 1.0:
                return 0.0
            wa = 1.0 - va
            return f(sa * va / wa, b) * sa / (wa * wa)

        value, err = _quad(inner, u_min, 1.0, inner_spec)
        inner_err[0] = max(inner_err[0], err * jac_b)
        return value * jac_b

    value, err = _quad(outer, 0.0, 1.0, spec)
    return value, err + inner_err[0]


def esp_bruteforce(values: Sequence[float]) -> list[float]:
    """Elementary symmetric polynomials by summing over every subset."""
    values = [float(v) for v in values]
    if len(values) > ESP_MAX_LENGTH:
        raise TooLarge(f"subset enumeration limited to {ESP_MAX_LENGTH} values, got {len(values)}")
    out = [1.0]
    for k in range(1, len(values) + 1):
        out.append(math.fsum(math.prod(c) for c in combinations(values, k)))
    return out


# --- posterior integrals rebuilt from raw data -------------------------------

class _RawPosterior:
    """Unnormalised posterior ``L(t | a, b) h(a, b)`` from the failure times."""

    def __init__(self, times, n, theta, lambda1, lambda2, rho):
        t = [float(x) for x in times]
        r = len(t)
        self.v = [x ** (theta - 1.0) for x in t]
        self.s1 = sum(t) + (n - r) * t[-1]
        self.s2 = sum(x**theta for x in t) + (n - r) * t[-1] ** theta
        self.theta, self.l1, self.l2, self.rho = theta, lambda1, lambda2, rho
        self.r = r
        # rough posterior scales for the quadrature maps
        self.scale_a = (r + 1.0) / (self.s1 + lambda1)
        self.scale_b = (r + 1.0) / (self.s2 / theta + lambda2)
        self.log_ref = 0.0
        self.log_ref = self.log_unnormalised(self.scale_a, self.scale_b)

    def log_unnormalised(self, a, b):
        acc = 0.0
        for v in self.v:
            h = a + b * v
            if h <= 0:
                return -math.inf
            acc += math.log(h)
        acc -= a * self.s1 + b * self.s2 / self.theta
        ea = math.exp(-self.l1 * a)
        eb = math.exp(-self.l2 * b)
        prior = self.l1 * self.l2 * ea * eb * (1.0 + self.rho * (1.0 - 2.0 * ea) * (1.0 - 2.0 * eb))
        if prior <= 0:
            return -math.inf
        return acc + math.log(prior) - self.log_ref

    def density(self, a, b):
        return math.exp(self.log_unnormalised(a, b))


_WEIGHTS = {
    "1": lambda a, b, c: 1.0,
    "a": lambda a, b, c: a,
    "b": lambda a, b, c: b,
    "1/a": lambda a, b, c: 1.0 / a,
    "1/b": lambda a, b, c: 1.0 / b,
    "exp_a": lambda a, b, c: math.exp(-c * a),
    "exp_b": lambda a, b, c: math.exp(-c * b),
}


def _raw_from_ctx(ctx) -> _RawPosterior:
    cfg = ctx.cfg
    return _RawPosterior(ctx.times, ctx.n, cfg.theta, cfg.lambda1, cfg.lambda2, cfg.rho)


def posterior_moment(ctx, weight: str = "1", c: float | None = None,
                     spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """Posterior expectation of ``weight`` by 2-D quadrature.

    ``weight`` is one of ``"1"``, ``"a"``, ``"b"``, ``"1/a"``, ``"1/b"``,
    ``"exp_a"`` (``exp(-c a)``) or ``"exp_b"`` (``exp(-c b)``). Returns the
    value and a propagated error estimate. Reciprocal weights are
    integrated with a shrinking inner cutoff; growth that does not settle
    raises :class:`DivergenceDetected`.
    """
    spec = spec or QuadratureSpec(relative_tolerance=1e-10)
    if weight not in _WEIGHTS:
        raise ValueError(f"unknown weight {weight!r}")
    if weight.startswith("exp") and c is None:
        raise ValueError("exponential weights need c")
    raw = _raw_from_ctx(ctx)
    scales = (raw.scale_a, raw.scale_b)
    w = _WEIGHTS[weight]

    z, z_err = integrate_2d(raw.density, spec, scales)
    if weight in ("1/a", "1/b"):
        value, err = _reciprocal_moment(raw, weight, spec, scales)
    else:
        value, err = integrate_2d(lambda a, b: w(a, b, c) * raw.density(a, b), spec, scales)
    moment = value / z
    return moment, abs(moment) * (err / abs(value) + z_err / z) if value else err / z


def _reciprocal_moment(raw: _RawPosterior, weight: str, spec, scales):
    if weight == "1/a":
        def f(a, b):
            return raw.density(a, b) / a
        scale = scales[0]
    else:
        def f(a, b):  # swap roles so the cutoff always sits on the first axis
            return raw.density(b, a) / a
        scales = scales[::-1]
        scale = scales[0]
    values = []
    for exponent in (3, 6, 9, 12):
        v, _ = integrate_2d(f, spec, scales, a_min=scale * 10.0**-exponent)
        values.append(v)
    steps = np.diff(values)
    if steps[-1] > 100 * spec.relative_tolerance * values[-1] and steps.min() > 0:
        # log-divergence: each equal step in log(cutoff) adds the same mass
        raise DivergenceDetected(
            f"E[{weight}] keeps growing as the cutoff shrinks (increments {steps.tolist()})"
        )
    return values[-1], abs(steps[-1])


def posterior_mean_oracle(ctx, spec: QuadratureSpec | None = None) -> tuple[float, float, float, float]:
    """``(E[a], E[b], err_a, err_b)`` sharing one normalising integral."""
    spec = spec or QuadratureSpec(relative_tolerance=1e-10)
    raw = _raw_from_ctx(ctx)
    scales = (raw.scale_a, raw.scale_b)
    z, z_err = integrate_2d(raw.density, spec, scales)
    ma, ea = integrate_2d(lambda a, b: a * raw.density(a, b), spec, scales)
    mb, eb = integrate_2d(lambda a, b: b * raw.density(a, b), spec, scales)
    return ma / z, mb / z, ma / z * (ea / ma + z_err / z), mb / z * (eb / mb + z_err / z)


def truncated_phi_direct(times: Sequence[float], n: int, theta: float, lambda1: float, lambda2: float,
                         l: int, m: int, p: int, q: int) -> float:
    """``Phi(l, m, p, q)`` with ``Gamma(0)`` terms omitted, term by term in plain floats.

    Uses subset enumeration for ``M_j`` and ``math.gamma``; intended for
    small ``r`` only.
    """
    t = [float(x) for x in times]
    r = len(t)
    s1 = sum(t) + (n - r) * t[-1]
    s2 = sum(x**theta for x in t) + (n - r) * t[-1] ** theta
    rate_a = s1 + p * lambda1
    rate_b = s2 / theta + q * lambda2
    m_coef = esp_bruteforce([x ** (theta - 1.0) for x in t])
    total = 0.0
    for j in range(r + 1):
        ka, kb = r - j + l, j + m
        if ka <= 0 or kb <= 0:
            continue
        total += m_coef[j] * math.gamma(ka) / rate_a**ka * math.gamma(kb) / rate_b**kb
    return total


def truncated_entropy_estimates(times, n, theta, lambda1, lambda2, rho) -> tuple[float, float]:
    """Drop-divergent entropy estimates assembled from :func:`truncated_phi_direct`."""
    def bracket(l, m):
        f = lambda p, q: truncated_phi_direct(times, n, theta, lambda1, lambda2, l, m, p, q)
        return f(1, 1) + rho * (4 * f(2, 2) - 2 * f(1, 2) - 2 * f(2, 1) + f(1, 1))

    base = bracket(1, 1)
    return base / bracket(0, 1), base / bracket(1, 0)


def quadrature_cdf(f: Callable[[float], float], grid: np.ndarray,
                   spec: QuadratureSpec | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of density ``f`` on ``(0, inf)`` from interval-by-interval quadrature.

    The values at ``grid`` are exact to quadrature tolerance. Between
    nodes a cubic Hermite spline uses the density itself as the slope; on
    ``(0, grid[0])`` and beyond the last node the same slope-matched cubic
    and an exponential tail take over.
    """
    spec = spec or QuadratureSpec(relative_tolerance=1e-10)
    grid = np.asarray(grid, dtype=float)
    if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    pieces = [_quad(f, 0.0, grid[0], spec)[0]]
    for lo, hi in zip(grid[:-1], grid[1:]):
        pieces.append(_quad(f, lo, hi, spec)[0])
    nodes = np.concatenate([[0.0], grid])
    cdf_values = np.cumsum([0.0, *pieces])
    last = grid[-1]
    tail, _ = _quad(lambda u: 0.0 if u >= 1 else f(last + u / (1 - u)) / (1 - u) ** 2, 0.0, 1.0, spec)
    total = cdf_values[-1] + tail
    # f may blow up at 0 (theta < 1); then a zero slope is used, which only affects (0, grid[0])
    near_zero = f(grid[0] * 1e-9)
    slopes = np.array([near_zero if math.isfinite(near_zero) else 0.0, *(f(x) for x in grid)])
    interp = CubicHermiteSpline(nodes, cdf_values, slopes)
    decay = slopes[-1] / tail if tail > 0 else 1.0

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        hi = x > last
        out[~hi] = interp(np.clip(x[~hi], 0, None))
        out[hi] = cdf_values[-1] + tail * -np.expm1(-decay * (x[hi] - last))
        return out / total

    cdf.total_mass = total
    return cdf
