"""Type-II censored samples and their sufficient statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BadCounts, NonPositiveTime, NumericalError, SampleParseError, TiedTimes, Unordered

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CensoredSample:
    """The ``r`` smallest of ``n`` lifetimes, in increasing order."""

    n: int
    r: int
    times: tuple[float, ...]

    def __init__(self, n: int, r: int, times: Sequence[float]):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "r", int(r))
        object.__setattr__(self, "times", tuple(float(t) for t in times))

    def validate(self) -> "CensoredSample":
        validate(self)
        return self

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)


def validate(sample: CensoredSample) -> CensoredSample:
    """Check the censoring invariants; return the sample unchanged or raise."""
    n, r, times = sample.n, sample.r, sample.times
    if r < 1 or n < 1 or r > n:
        raise BadCounts(f"need 1 <= r <= n, got n={n}, r={r}")
    if len(times) != r:
        raise BadCounts(f"expected {r} failure times, got {len(times)}")
    for i, t in enumerate(times):
        if not (math.isfinite(t) and t > 0):
            raise NonPositiveTime(f"failure time #{i + 1} is {t!r}; times must be positive and finite")
    for i in range(1, r):
        if times[i] == times[i - 1]:
            raise TiedTimes(f"failure times #{i} and #{i + 1} coincide ({times[i]!r})")
        if times[i] < times[i - 1]:
            raise Unordered(f"failure time #{i + 1} ({times[i]!r}) precedes #{i} ({times[i - 1]!r})")
    return sample


def break_ties(times: np.ndarray) -> tuple[np.ndarray, int]:
    """Sort and nudge repeated values up by one ulp each.

    Returns the strictly increasing array and the number of nudges applied.
    """
    out = np.sort(np.asarray(times, dtype=float))
    nudged = 0
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], np.inf)
            nudged += 1
    if nudged:
        log.debug("broke %d tied failure times", nudged)
    return out, nudged


def censor(draws: Sequence[float], r: int) -> tuple[CensoredSample, int]:
    """Type-II censor ``draws`` at the ``r``-th failure, breaking ties."""
    ordered, nudged = break_ties(np.asarray(draws, dtype=float))
    sample = CensoredSample(len(ordered), r, ordered[:r])
    return validate(sample), nudged


@dataclass(frozen=True)
class SummaryStats:
    """``S1``, ``S2`` and the coefficients ``M_0..M_r`` of a sample.

    ``M_j = m_mantissa[j] * 2**m_exponent[j]``. Use :attr:`log_m` for
    arithmetic; :attr:`m` materialises plain floats and may overflow.
    """

    s1: float
    s2: float
    m_mantissa: np.ndarray = field(repr=False)
    m_exponent: np.ndarray = field(repr=False)
    theta: float

    @property
    def r(self) -> int:
        return len(self.m_mantissa) - 1

    @property
    def log_m(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.m_mantissa) + self.m_exponent * math.log(2.0)

    @property
    def m(self) -> np.ndarray:
        with np.errstate(over="raise"):
            try:
                return np.ldexp(self.m_mantissa, self.m_exponent)
            except FloatingPointError as exc:
                raise NumericalError("M_j exceeds the double range; use log_m") from exc


def elementary_symmetric(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """All elementary symmetric polynomials of nonnegative ``values``.

    One pass of ``e_j <- e_j + v * e_{j-1}`` per value (all j at once, which
    reads the previous pass and so matches the descending-j scalar loop).
    Each coefficient carries its own binary exponent, so coefficients far
    outside the double range, large or small, keep full relative precision.
    Returns ``(mantissa, exponent)`` with ``e_j = mantissa[j] * 2**exponent[j]``.
    """
    v = np.asarray(values, dtype=float)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("elementary_symmetric needs finite nonnegative values")
    mant = np.zeros(v.size + 1)
    expo = np.zeros(v.size + 1, dtype=np.int64)
    mant[0] = 1.0
    v_mant, v_expo = np.frexp(v)
    for i in range(v.size):
        # product v * e_{j-1} and the old e_j, aligned to the larger exponent
        pm = v_mant[i] * mant[: i + 1]
        pe = v_expo[i] + expo[: i + 1]
        om, oe = mant[1 : i + 2], expo[1 : i + 2]
        top = np.maximum(np.where(pm > 0, pe, oe), np.where(om > 0, oe, pe))
        total = np.ldexp(pm, pe - top) + np.ldexp(om, oe - top)
        m, e = np.frexp(total)
        mant[1 : i + 2] = m
        expo[1 : i + 2] = np.where(m > 0, e + top, 0)
    return mant, expo


def summarize(sample: CensoredSample, theta: float) -> SummaryStats:
    """Compute ``S1``, ``S2`` and ``M_j`` (elementary symmetric polynomials of ``t_i**(theta-1)``)."""
    validate(sample)
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    t = sample.array
    censored = sample.n - sample.r
    t_r = t[-1]
    s1 = float(t.sum() + censored * t_r)
    t_pow = t**theta
    s2 = float(t_pow.sum() + censored * t_r**theta)
    mantissa, exponent = elementary_symmetric(t ** (theta - 1.0))
    return SummaryStats(s1=s1, s2=s2, m_mantissa=mantissa, m_exponent=exponent, theta=float(theta))


def parse_sample_text(text: str) -> tuple[CensoredSample, float]:
    """Parse ``"n r theta"`` followed by ``r`` lines of failure times."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise SampleParseError("line 1: empty sample file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        raise SampleParseError(f"line {no}: expected 'n r theta', got {header!r}")
    try:
        n, r = int(parts[0]), int(parts[1])
        theta = float(parts[2])
    except ValueError as exc:
        raise SampleParseError(f"line {no}: {exc}") from exc
    body = lines[1:]
    if len(body) != r:
        where = body[-1][0] if body else no
        raise SampleParseError(f"line {where}: header announces r={r} failure times, found {len(body)}")
    times = []
    for no, ln in body:
        try:
            times.append(float(ln))
        except ValueError as exc:
            raise SampleParseError(f"line {no}: not a number: {ln!r}") from exc
    return validate(CensoredSample(n, r, times)), theta


def read_sample(path: str | Path) -> tuple[CensoredSample, float]:
    return parse_sample_text(Path(path).read_text())


def format_sample(sample: CensoredSample, theta: float) -> str:
    lines = [f"{sample.n} {sample.r} {theta!r}"]
    lines += [repr(t) for t in sample.times]
    return "\n".join(lines) + "\n"
