"""Independence Metropolis-Hastings sampler for the marginal lifetime law.

Each step consumes exactly two uniforms from a PCG64 stream: the first is
turned into an exponential proposal by inversion, the second decides
acceptance. The bulk path (:func:`advance`) and the one-step path
(:func:`mh_step`) therefore walk the same chain for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import ConfigError, ZeroDensity
from .model import ModelConfig, marginal_lifetime_pdf
from .sample import CensoredSample, censor

log = logging.getLogger(__name__)

GENERATOR = "numpy.random.PCG64"
_BLOCK = 1 << 16

Density = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MhConfig:
    """Sampler protocol: burn-in, gap between samples, proposal rate and seed.

    ``proposal_rate=None`` means ``(lambda1 + lambda2) / 2``.
    ``within_sample_gap`` discards that many states between the draws of
    one sample; 0 takes consecutive chain states, which with the default
    proposal (acceptance near 5%) repeats most values within a sample.
    """

    burn_in: int = 5000
    inter_sample_gap: int = 100
    proposal_rate: float | None = None
    seed: int = 0
    within_sample_gap: int = 100

    def __post_init__(self):
        if self.burn_in < 0 or self.inter_sample_gap < 0 or self.within_sample_gap < 0:
            raise ConfigError("burn_in and gaps must be nonnegative")
        if self.proposal_rate is not None and not self.proposal_rate > 0:
            raise ConfigError("proposal_rate must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def rate_for(self, cfg: ModelConfig) -> float:
        if self.proposal_rate is not None:
            return float(self.proposal_rate)
        return (cfg.lambda1 + cfg.lambda2) / 2.0


@dataclass
class ChainState:
    """Mutable single-owner chain: current draw, counters and the generator."""

    current: float
    log_weight: float
    rng: np.random.Generator
    accepted_count: int = 0
    proposed_count: int = 0
    burned_in: bool = False
    ties_broken: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_count / self.proposed_count if self.proposed_count else math.nan


def _log_weights(density: Density, rate: float, t: np.ndarray) -> np.ndarray:
    """``log f(t) - log q(t)`` for the exponential proposal ``q``; -inf where ``f`` is 0."""
    out = np.full(t.shape, -np.inf)
    ok = t > 0
    with np.errstate(divide="ignore", over="ignore"):
        out[ok] = np.log(density(t[ok])) + rate * t[ok] - math.log(rate)
    return out


def _proposals(u: np.ndarray, rate: float) -> np.ndarray:
    return -np.log1p(-u) / rate


def start_chain(density: Density, rate: float, seed: int, max_tries: int = 1000) -> ChainState:
    """Seed a chain at the first proposal with positive target density."""
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_tries):
        u = rng.random(2)
        t = _proposals(u[:1], rate)
        lw = _log_weights(density, rate, t)[0]
        if np.isfinite(lw):
            return ChainState(current=float(t[0]), log_weight=float(lw), rng=rng)
    raise ZeroDensity(f"no proposal with positive target density in {max_tries} tries")


def mh_step(state: ChainState, density: Density, rate: float) -> ChainState:
    """One independence-sampler step; mutates and returns ``state``."""
    u = state.rng.random(2)
    t = _proposals(u[:1], rate)
    lw = _log_weights(density, rate, t)[0]
    state.proposed_count += 1
    with np.errstate(divide="ignore", invalid="ignore"):
        log_u = np.log(u[1:])[0]
        accept = lw - state.log_weight > log_u
    if accept:
        state.current = float(t[0])
        state.log_weight = float(lw)
        state.accepted_count += 1
    return state


@numba.njit(cache=True)
def _accept_loop(props, lw_props, log_u, cur, lw_cur, trace):
    accepted = 0
    for i in range(props.size):
        if lw_props[i] - lw_cur > log_u[i]:
            cur = props[i]
            lw_cur = lw_props[i]
            accepted += 1
        trace[i] = cur
    return cur, lw_cur, accepted


def advance(state: ChainState, density: Density, rate: float, steps: int, keep_every: int = 0) -> np.ndarray:
    """Run ``steps`` sampler steps.

    Returns the states after every ``keep_every``-th step (none when 0).
    """
    kept = []
    offset = 0
    remaining = steps
    while remaining > 0:
        k = min(_BLOCK, remaining)
        u = state.rng.random((k, 2))
        props = _proposals(u[:, 0], rate)
        lw_props = _log_weights(density, rate, props)
        with np.errstate(divide="ignore"):
            log_u = np.log(u[:, 1])
        trace = np.empty(k)
        cur, lw_cur, acc = _accept_loop(props, lw_props, log_u, state.current, state.log_weight, trace)
        state.current, state.log_weight = float(cur), float(lw_cur)
        state.accepted_count += int(acc)
        state.proposed_count += k
        if keep_every:
            # global step numbers offset+1 .. offset+k; keep those divisible by keep_every
            first = (-offset - 1) % keep_every
            kept.append(trace[first::keep_every])
        offset += k
        remaining -= k
    return np.concatenate(kept) if kept else np.empty(0)


def marginal_target(cfg: ModelConfig) -> Density:
    return lambda t: marginal_lifetime_pdf(cfg, t)


def new_chain(cfg: ModelConfig, mh: MhConfig) -> ChainState:
    return start_chain(marginal_target(cfg), mh.rate_for(cfg), mh.seed)


def draw_censored_sample(cfg: ModelConfig, mh: MhConfig, n: int, r: int,
                         state: ChainState | None = None) -> tuple[CensoredSample, ChainState]:
    """Draw ``n`` lifetimes from the chain and keep the ``r`` smallest.

    Burn-in runs once per chain. After the sample, ``inter_sample_gap``
    states are discarded.
    """
    if not 1 <= r <= n:
        raise ConfigError(f"need 1 <= r <= n, got n={n}, r={r}")
    density = marginal_target(cfg)
    rate = mh.rate_for(cfg)
    if state is None:
        state = start_chain(density, rate, mh.seed)
    if not state.burned_in:
        advance(state, density, rate, mh.burn_in)
        state.burned_in = True
    stride = mh.within_sample_gap + 1
    draws = advance(state, density, rate, n * stride, keep_every=stride)
    sample, nudged = censor(draws, r)
    if nudged:
        state.ties_broken += nudged
        log.debug("sample had %d tied draws; nudged by one ulp each", nudged)
    advance(state, density, rate, mh.inter_sample_gap)
    return sample, state


def run_repetitions(cfg: ModelConfig, mh: MhConfig, n: int, r: int, reps: int,
                    state: ChainState | None = None) -> list[CensoredSample]:
    """``reps`` consecutive censored samples from one chain."""
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    out = []
    for _ in range(reps):
        sample, state = draw_censored_sample(cfg, mh, n, r, state)
        out.append(sample)
    return out


def thinned_draws(cfg: ModelConfig, mh: MhConfig, count: int, thin: int | None = None,
                  state: ChainState | None = None) -> tuple[np.ndarray, ChainState]:
    """``count`` post-burn-in states, one every ``thin`` steps (default: the inter-sample gap)."""
    thin = mh.inter_sample_gap if thin is None else thin
    thin = max(int(thin), 1)
    density = marginal_target(cfg)
    rate = mh.rate_for(cfg)
    if state is None:
        state = start_chain(density, rate, mh.seed)
    if not state.burned_in:
        advance(state, density, rate, mh.burn_in)
        state.burned_in = True
    return advance(state, density, rate, count * thin, keep_every=thin), state


def write_draws(path: str | Path, values: Sequence[float]) -> None:
    Path(path).write_text("".join(f"{v!r}\n" for v in map(float, values)))
