"""Cross-checks of the closed forms against the brute-force oracles."""

from __future__ import annotations

import numpy as np

from . import model, oracle
from .model import ModelConfig, ParamPair
from .posterior import PosteriorContext, estimate_entropy, estimate_squared_error
from .sample import CensoredSample, summarize


def random_context(rng: np.random.Generator, theta_range=(1.1, 5.0), lam_range=(0.05, 2.0),
                   n_max=50, r_max=15) -> PosteriorContext:
    """A random model and censored sample inside the given ranges."""
    cfg = ModelConfig(
        theta=float(rng.uniform(*theta_range)),
        lambda1=float(rng.uniform(*lam_range)),
        lambda2=float(rng.uniform(*lam_range)),
        rho=float(rng.uniform(-1, 1)),
    )
    r = int(rng.integers(1, r_max + 1))
    n = int(rng.integers(r, n_max + 1))
    draws = np.sort(rng.exponential(1.0, size=n))
    return PosteriorContext.from_sample(cfg, CensoredSample(n, r, draws[:r]))


def _rel(a, b):
    return abs(a - b) / abs(b)


def run_checks(quick: bool = True, seed: int = 20131) -> list[tuple[str, bool, str]]:
    """Run every cross-check; returns ``(name, passed, detail)`` per check."""
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(20 if quick else 200):
        k = int(rng.integers(1, 13))
        v = rng.uniform(0.1, 3.0, size=k)
        theta = float(rng.uniform(0.5, 4.0))
        stats = summarize(CensoredSample(k, k, np.sort(v)), theta)
        ref = oracle.esp_bruteforce(np.sort(v) ** (theta - 1))
        worst = max(worst, max(_rel(x, y) for x, y in zip(stats.m, ref)))
    results.append(("symmetric polynomials vs subset enumeration", bool(worst < 1e-12), f"max rel err {worst:.2e}"))

    cfgs = [ModelConfig(1.5, 0.1, 0.2, 0.5), ModelConfig(0.7, 1.0, 0.5, -0.8), ModelConfig(3.0, 2.0, 0.05, 1.0)]
    worst = 0.0
    for cfg in cfgs:
        scale = min(cfg.lambda1, cfg.lambda2)
        val, _ = oracle.integrate_1d(lambda t: model.marginal_lifetime_pdf(cfg, t),
                                     oracle.QuadratureSpec(1e-10, 500, scale=scale))
        worst = max(worst, abs(val - 1))
    results.append(("marginal lifetime density integrates to 1", worst < 1e-6, f"max |1 - integral| {worst:.2e}"))

    cfg = ModelConfig(2.0, 1.0, 1.0, 0.5)
    t = 1.0
    val, _ = oracle.integrate_2d(
        lambda a, b: model.lifetime_pdf(ParamPair(a, b), cfg.theta, t) * model.prior_density(cfg, a=a, b=b)
        if a + b > 0 else 0.0,
        oracle.QuadratureSpec(1e-10),
    )
    err = _rel(model.marginal_lifetime_pdf(cfg, t), val)
    results.append(("marginal density matches 2-D quadrature", err < 1e-8, f"rel err {err:.2e}"))

    worst = 0.0
    for _ in range(3 if quick else 50):
        ctx = random_context(rng)
        a_bs, b_bs = estimate_squared_error(ctx)
        qa, qb, _, _ = oracle.posterior_mean_oracle(ctx)
        worst = max(worst, _rel(a_bs, qa), _rel(b_bs, qb))
    results.append(("posterior means vs 2-D quadrature", worst < 1e-6, f"max rel err {worst:.2e}"))

    worst = 0.0
    for _ in range(5 if quick else 50):
        ctx = random_context(rng)
        a_be, b_be, _ = estimate_entropy(ctx, "drop")
        cfg = ctx.cfg
        ra, rb = oracle.truncated_entropy_estimates(ctx.times, ctx.n, cfg.theta, cfg.lambda1, cfg.lambda2, cfg.rho)
        worst = max(worst, _rel(a_be, ra), _rel(b_be, rb))
    results.append(("drop-divergent entropy estimates vs direct sums", worst < 1e-10, f"max rel err {worst:.2e}"))

    return results
