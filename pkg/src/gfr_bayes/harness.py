"""Simulation sweeps: repeated censored samples, estimator averages, variances and risks.

Every sweep point draws its samples from a chain seeded with the same
seed, so points that differ only in loss constants see identical data and
nearby points share common random numbers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, replace
import datetime as _dt
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, EntropyRiskUndefined, GFRError, NumericalError
from .mcmc import GENERATOR, MhConfig, new_chain, draw_censored_sample
from .model import ModelConfig
from .posterior import (
    ESTIMATORS,
    EstimateSet,
    LossConstants,
    entropy_loss,
    estimate,
    linex_loss,
    normalize_entropy_mode,
    squared_error_loss,
)

log = logging.getLogger(__name__)

SWEEPABLE = ("n", "r", "theta", "rho", "lambda1", "lambda2", "c1", "c2")
VARIANCE_COLUMNS = tuple(f"v_{k}" for k in ESTIMATORS)
RISK_COLUMNS = ("r_bs", "r_bl", "r_be")
MAX_FAILURE_FRACTION = 0.01

_INT_KEYS = {"n", "r", "repetitions", "burn_in", "inter_sample_gap", "within_sample_gap", "seed"}
_FLOAT_KEYS = {"theta", "lambda1", "lambda2", "rho", "c1", "c2", "k1", "k2", "l1", "l2", "m1", "m2",
               "proposal_rate"}
_STR_KEYS = {"entropy_mode", "name", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    n: int
    r: int
    loss: LossConstants
    mh: MhConfig
    sweep_param: str
    sweep_values: tuple
    repetitions: int = 1000
    entropy_mode: str = "drop"
    output_path: str = "."
    name: str = "table"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.sweep_param not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.sweep_param!r}; choose one of {', '.join(SWEEPABLE)}")
        if not self.sweep_values:
            raise ConfigError("empty sweep: nothing to run, nothing written")
        object.__setattr__(self, "entropy_mode", normalize_entropy_mode(self.entropy_mode))
        for v in self.sweep_values:
            self.point(v)  # validates every sweep value up front

    def point(self, value) -> tuple[ModelConfig, int, int, LossConstants]:
        """Model, ``n``, ``r`` and loss constants with the swept parameter set to ``value``."""
        model, n, r, loss = self.model, self.n, self.r, self.loss
        p = self.sweep_param
        if p in ("n", "r"):
            if float(value) != int(value):
                raise ConfigError(f"{p} must be an integer, got {value!r}")
            n, r = (int(value), r) if p == "n" else (n, int(value))
        elif p in ("c1", "c2"):
            loss = replace(loss, **{p: float(value)})
        else:
            model = model.replace(**{p: float(value)})
        if not 1 <= r <= n:
            raise ConfigError(f"need 1 <= r <= n at {p}={value}, got n={n}, r={r}")
        return model, n, r, loss

    def canonical_text(self) -> str:
        items = {
            "theta": self.model.theta, "lambda1": self.model.lambda1, "lambda2": self.model.lambda2,
            "rho": self.model.rho, "n": self.n, "r": self.r,
            "repetitions": self.repetitions, "entropy_mode": self.entropy_mode, "name": self.name,
            "burn_in": self.mh.burn_in, "inter_sample_gap": self.mh.inter_sample_gap,
            "within_sample_gap": self.mh.within_sample_gap, "seed": self.mh.seed,
            "proposal_rate": self.mh.proposal_rate,
        }
        for k in ("c1", "c2", "k1", "k2", "l1", "l2", "m1", "m2"):
            items[k] = getattr(self.loss, k)
        lines = [f"{k} = {items[k]!r}" for k in sorted(items)]
        lines.append(f"sweep.{self.sweep_param} = " + ",".join(repr(v) for v in self.sweep_values))
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` experiment file.

    Exactly one ``sweep.<param> = v1, v2, ...`` line names the swept
    parameter. ``#`` starts a comment. Keyword ``overrides`` (e.g.
    ``seed=3``) replace file values.
    """
    values: dict[str, object] = {}
    sweep: tuple[str, tuple] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = (s.strip() for s in line.partition("="))
        if key.startswith("sweep."):
            if sweep is not None:
                raise ConfigError(f"line {lineno}: only one sweep line is allowed")
            param = key[len("sweep."):]
            if param not in SWEEPABLE:
                raise ConfigError(f"line {lineno}: cannot sweep {param!r}")
            items = [v.strip() for v in value.split(",") if v.strip()]
            try:
                parsed = tuple(int(v) if param in ("n", "r") else float(v) for v in items)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad sweep value ({exc})") from exc
            sweep = (param, parsed)
            continue
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _STR_KEYS:
                values[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    if sweep is None:
        raise ConfigError("config has no 'sweep.<param> = ...' line")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values, sweep[0], sweep[1])


def build_config(values: dict, sweep_param: str, sweep_values: Sequence) -> ExperimentConfig:
    missing = [k for k in ("theta", "lambda1", "lambda2", "n", "r") if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    model = ModelConfig(values["theta"], values["lambda1"], values["lambda2"], values.get("rho", 0.0))
    loss = LossConstants(**{k: values[k] for k in ("c1", "c2", "k1", "k2", "l1", "l2", "m1", "m2") if k in values})
    mh = MhConfig(**{k: values[k] for k in ("burn_in", "inter_sample_gap", "within_sample_gap",
                                             "proposal_rate", "seed") if k in values})
    return ExperimentConfig(
        model=model, n=int(values["n"]), r=int(values["r"]), loss=loss, mh=mh,
        sweep_param=sweep_param, sweep_values=tuple(sweep_values),
        repetitions=int(values.get("repetitions", 1000)),
        entropy_mode=str(values.get("entropy_mode", "drop")),
        output_path=str(values.get("output", ".")), name=str(values.get("name", "table")),
    )


@dataclass(frozen=True)
class RiskRow:
    swept_value: object
    r_bs: float
    r_bl: float
    r_be: float
    entropy_undefined: bool = False


@dataclass(frozen=True)
class SweepRow:
    swept_value: object
    means: dict
    variances: dict
    divergence_counts: dict
    risk: RiskRow
    failures: int = 0
    acceptance_rate: float = math.nan
    ties_broken: int = 0


def empirical_risk(estimates: Sequence[EstimateSet], loss: LossConstants, swept_value=None) -> RiskRow:
    """Average loss of each repetition's estimates against their across-repetition mean.

    The mean plays the role of the true parameter. ``r_be`` is NaN (and
    ``entropy_undefined`` set) if any entropy estimate is 0.
    """
    if not estimates:
        raise ConfigError("empirical_risk needs at least one estimate set")
    arr = np.array([e.as_tuple() for e in estimates], dtype=float)
    a_bs, b_bs, a_bl, b_bl, a_be, b_be = arr.T
    r_bs = float(np.mean(squared_error_loss(a_bs.mean(), b_bs.mean(), a_bs, b_bs, loss)))
    r_bl = float(np.mean(linex_loss(a_bl.mean(), b_bl.mean(), a_bl, b_bl, loss)))
    try:
        r_be = float(np.mean(entropy_loss(a_be.mean(), b_be.mean(), a_be, b_be, loss)))
        undefined = False
    except EntropyRiskUndefined:
        r_be, undefined = math.nan, True
    return RiskRow(swept_value, r_bs, r_bl, r_be, undefined)


def run_point(config: ExperimentConfig, value) -> tuple[SweepRow, list[EstimateSet]]:
    """All repetitions at one sweep value."""
    model, n, r, loss = config.point(value)
    state = new_chain(model, config.mh)
    estimates: list[EstimateSet] = []
    failures = 0
    for rep in range(config.repetitions):
        sample, state = draw_censored_sample(model, config.mh, n, r, state)
        try:
            estimates.append(estimate(sample, model, loss, config.entropy_mode))
        except (GFRError, ArithmeticError) as exc:
            failures += 1
            log.warning("%s=%s repetition %d failed: %s", config.sweep_param, value, rep, exc)
    if failures > MAX_FAILURE_FRACTION * config.repetitions:
        raise NumericalError(
            f"{failures} of {config.repetitions} repetitions failed at {config.sweep_param}={value}"
        )
    arr = np.array([e.as_tuple() for e in estimates], dtype=float)
    means = dict(zip(ESTIMATORS, map(float, arr.mean(axis=0))))
    variances = dict(zip(VARIANCE_COLUMNS, map(float, arr.var(axis=0))))
    divergences = {k: sum(bool(e.divergence_flags.get(k)) for e in estimates) for k in ("a_be", "b_be")}
    risk = empirical_risk(estimates, loss, value)
    row = SweepRow(value, means, variances, divergences, risk, failures,
                   state.acceptance_rate, state.ties_broken)
    return row, estimates


def _run_point_row(args):
    config, value = args
    return run_point(config, value)[0]


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[SweepRow]:
    """One :class:`SweepRow` per sweep value, in sweep order."""
    work = [(config, v) for v in config.sweep_values]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_point_row, work))
    return [_run_point_row(w) for w in work]


# --- CSV output -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def table_paths(out_dir: str | Path, name: str) -> dict[str, Path]:
    out_dir = Path(out_dir)
    return {
        "estimates": out_dir / f"{name}_estimates.csv",
        "variances": out_dir / f"{name}_variances.csv",
        "risks": out_dir / f"{name}_risks.csv",
        "meta": out_dir / f"{name}_meta.json",
    }


def emit_tables(rows: Sequence[SweepRow], config: ExperimentConfig, out_dir: str | Path | None = None,
                fmt: str = "csv") -> dict[str, Path]:
    """Write the estimate, variance and risk tables plus a JSON metadata sidecar."""
    if fmt != "csv":
        raise ConfigError(f"unsupported table format {fmt!r}")
    if not rows:
        raise ConfigError("no rows to write (empty sweep); nothing written")
    out_dir = Path(out_dir if out_dir is not None else config.output_path)
    paths = table_paths(out_dir, config.name)
    p = config.sweep_param
    tables = {
        "estimates": ([p, *ESTIMATORS], [[r.swept_value, *(r.means[k] for k in ESTIMATORS)] for r in rows]),
        "variances": ([p, *VARIANCE_COLUMNS],
                      [[r.swept_value, *(r.variances[k] for k in VARIANCE_COLUMNS)] for r in rows]),
        "risks": ([p, *RISK_COLUMNS],
                  [[r.swept_value, r.risk.r_bs, r.risk.r_bl, r.risk.r_be] for r in rows]),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for key, (header, body) in tables.items():
            with open(paths[key], "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\r\n")
                writer.writerow(header)
                writer.writerows([_fmt(x) for x in line] for line in body)
        meta = {
            "seed": config.mh.seed,
            "generator": GENERATOR,
            "entropy_mode": config.entropy_mode,
            "config_hash": config.config_hash(),
            "config": config.canonical_text(),
            "package_version": __version__,
            "sweep_param": p,
            "repetitions": config.repetitions,
            "rows": [
                {
                    "swept_value": r.swept_value,
                    "divergence_counts": r.divergence_counts,
                    "failures": r.failures,
                    "entropy_risk_undefined": r.risk.entropy_undefined,
                    "acceptance_rate": r.acceptance_rate,
                    "ties_broken": r.ties_broken,
                }
                for r in rows
            ],
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        paths["meta"].write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write tables under {out_dir}: {exc}") from exc
    return paths


def read_tables(out_dir: str | Path, name: str) -> list[SweepRow]:
    """Rebuild the rows written by :func:`emit_tables`."""
    paths = table_paths(out_dir, name)
    meta = json.loads(paths["meta"].read_text())
    p = meta["sweep_param"]

    def load(path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            return header, [line for line in reader]

    _, est = load(paths["estimates"])
    _, var = load(paths["variances"])
    _, risk = load(paths["risks"])
    parse_x = int if p in ("n", "r") else float
    rows = []
    for e, v, k, m in zip(est, var, risk, meta["rows"]):
        x = parse_x(e[0])
        rows.append(SweepRow(
            swept_value=x,
            means=dict(zip(ESTIMATORS, map(float, e[1:]))),
            variances=dict(zip(VARIANCE_COLUMNS, map(float, v[1:]))),
            divergence_counts=m["divergence_counts"],
            risk=RiskRow(x, *map(float, k[1:]), entropy_undefined=m["entropy_risk_undefined"]),
            failures=m["failures"],
            acceptance_rate=m["acceptance_rate"],
            ties_broken=m["ties_broken"],
        ))
    return rows
