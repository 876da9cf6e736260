"""Batch experiment drivers.

run_convergence_sweep produces the convergence-rate study (estimate the
empirical-vs-source smoothed distance over a grid of sample sizes and noise
levels), fit_loglog_slope extracts decay exponents from it, and the two
harnesses run_metric_axioms and run_plan_convergence check the metric
axioms and the small-noise cost convergence statistically.

Sweep cells carry pre-assigned seed paths, so a thread pool may execute
them in any order while the assembled table stays bitwise deterministic.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from io import StringIO
from typing import NamedTuple

import numpy as np

from . import rng as _rng
from .errors import ConfigError, GsotError
from .got_estimator import (calibrate_bias_allowance, estimate_got,
                            one_sample_trial, pooled_std_err)
from .measures import DiscreteMeasure, SourceSpec
from .noise import NoiseModel
from .ot_exact import solve_transport

ARTIFACT_VERSION = "1"
CSV_HEADER = "d,sigma,n,m,trial,estimate,elapsed_ms"


def default_n_grid(lo: int = 10, hi: int = 3000, points: int = 8) -> tuple:
    """Geometric grid of distinct integer sample sizes."""
    grid = np.unique(np.rint(np.geomspace(lo, hi, points)).astype(int))
    return tuple(int(v) for v in grid)


DEFAULT_N_GRID = default_n_grid()


@dataclass(frozen=True)
class SweepConfig:
    """Design of one convergence sweep: which source, which noise levels,
    which sample sizes, how many trials, and how cloud resolution m follows
    n ("equal-n") or stays fixed ("fixed", requires m_fixed)."""

    source: SourceSpec
    noise_family: str = "gaussian"
    sigma_grid: tuple = (0.0, 1.0, 2.0, 4.0)
    n_grid: tuple = DEFAULT_N_GRID
    m_rule: str = "equal-n"
    m_fixed: int | None = None
    trials: int = 10
    seed: int = 0
    crn: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sigma_grid", tuple(float(s) for s in self.sigma_grid))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if not self.sigma_grid or not self.n_grid:
            raise ConfigError("sigma_grid and n_grid must be non-empty")
        if any(s < 0 for s in self.sigma_grid):
            raise ConfigError("sigma_grid values must be >= 0")
        if list(self.sigma_grid) != sorted(set(self.sigma_grid)):
            raise ConfigError("sigma_grid must be strictly increasing")
        if list(self.n_grid) != sorted(set(self.n_grid)) or self.n_grid[0] < 1:
            raise ConfigError("n_grid must be strictly increasing positive counts")
        if self.trials < 2:
            raise ConfigError("trials must be >= 2 so std_err is defined")
        if self.m_rule not in ("equal-n", "fixed"):
            raise ConfigError("m_rule must be 'equal-n' or 'fixed'")
        if self.m_rule == "fixed":
            if self.m_fixed is None or self.m_fixed < 1:
                raise ConfigError("m_rule 'fixed' requires m_fixed >= 1")
            if self.m_fixed < max(self.n_grid):
                raise ConfigError("fixed m must be >= every n in the grid")
        if self.crn and self.noise_family != "gaussian":
            raise ConfigError("common-random-numbers mode requires gaussian noise")
        NoiseModel(self.noise_family, max(self.sigma_grid))

    def m_for(self, n: int) -> int:
        return n if self.m_rule == "equal-n" else int(self.m_fixed)


def _source_payload(source: SourceSpec) -> dict:
    def arr(a):
        return None if a is None else np.asarray(a).tolist()

    return {
        "family": source.family, "d": source.d, "side": source.side,
        "std": source.std, "means": arr(source.means),
        "mix_weights": arr(source.mix_weights), "x": arr(source.x),
        "y": arr(source.y), "K": source.K,
    }


def config_hash(cfg: SweepConfig) -> str:
    """sha256 over the canonical JSON form of the sweep design."""
    payload = {
        "artifact_version": ARTIFACT_VERSION,
        "source": _source_payload(cfg.source),
        "noise_family": cfg.noise_family,
        "sigma_grid": list(cfg.sigma_grid),
        "n_grid": list(cfg.n_grid),
        "m_rule": cfg.m_rule,
        "m_fixed": cfg.m_fixed,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "crn": cfg.crn,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class Row:
    d: int
    sigma: float
    n: int
    m: int
    trial: int
    estimate: float
    elapsed_ms: float


@dataclass
class ResultTable:
    """Sweep results, one row per (sigma, n, trial) in canonical order."""

    rows: list
    metadata: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(math.isnan(r.estimate) for r in self.rows)

    def to_csv_string(self) -> str:
        out = StringIO()
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            out.write(f"{r.d},{r.sigma!r},{r.n},{r.m},{r.trial},"
                      f"{r.estimate!r},{r.elapsed_ms!r}\n")
        return out.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(self.to_csv_string())

    @classmethod
    def from_csv_string(cls, text: str, metadata=None) -> "ResultTable":
        lines = text.splitlines()
        if not lines or lines[0] != CSV_HEADER:
            raise ConfigError(f"CSV header must be exactly '{CSV_HEADER}'")
        rows = []
        for k, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ConfigError(f"CSV row {k} has {len(parts)} fields, expected 7")
            try:
                rows.append(Row(int(parts[0]), float(parts[1]), int(parts[2]),
                                int(parts[3]), int(parts[4]), float(parts[5]),
                                float(parts[6])))
            except ValueError as exc:
                raise ConfigError(f"CSV row {k}: {exc}") from exc
        return cls(rows=rows, metadata=dict(metadata or {}))

    @classmethod
    def from_csv(cls, path, metadata=None) -> "ResultTable":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_csv_string(fh.read(), metadata=metadata)

    def sigmas(self) -> tuple:
        seen = []
        for r in self.rows:
            if r.sigma not in seen:
                seen.append(r.sigma)
        return tuple(seen)

    def mean_by_n(self, sigma: float) -> dict:
        """n -> (mean estimate, std_err) over trials at the given sigma."""
        groups: dict = {}
        for r in self.rows:
            if r.sigma == sigma and not math.isnan(r.estimate):
                groups.setdefault(r.n, []).append(r.estimate)
        out = {}
        for n, vals in sorted(groups.items()):
            mean = math.fsum(vals) / len(vals)
            if len(vals) > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
                se = math.sqrt(var / len(vals))
            else:
                se = 0.0
            out[n] = (mean, se)
        return out


def _sweep_cell(cfg: SweepConfig, sigma: float, n: int, trial: int):
    noise = NoiseModel(cfg.noise_family, sigma)
    m = cfg.m_for(n)
    cell_seed = _rng.subseed(cfg.seed, "sweep", n)
    start = time.perf_counter()
    try:
        value = one_sample_trial(cfg.source, noise, n, m, cell_seed, trial,
                                 crn=cfg.crn)
    except GsotError:
        value = float("nan")
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return Row(cfg.source.d, sigma, n, m, trial, value, elapsed_ms)


def run_convergence_sweep(cfg: SweepConfig, jobs: int = 1) -> ResultTable:
    """Estimate the one-sample smoothed distance over the whole grid.

    Each (sigma, n, trial) cell is an independent job with a pre-assigned
    seed path; failures leave a nan row rather than aborting the sweep.
    """
    cells = [(sigma, n, trial)
             for sigma in cfg.sigma_grid
             for n in cfg.n_grid
             for trial in range(cfg.trials)]
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if jobs == 1:
        rows = [_sweep_cell(cfg, *cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda c: _sweep_cell(cfg, *c), cells))
    meta = {"seed": cfg.seed, "config_hash": config_hash(cfg),
            "artifact_version": ARTIFACT_VERSION}
    return ResultTable(rows=rows, metadata=meta)


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    n_used: tuple
    excluded: tuple


def _ols_loglog(pairs) -> tuple:
    x = np.log(np.array([n for n, _ in pairs], dtype=float))
    y = np.log(np.array([v for _, v in pairs], dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def fit_loglog_slope(table: ResultTable, sigma: float) -> SlopeFit:
    """Least-squares decay exponent of mean estimate vs n in log-log space.

    Non-positive means cannot be logged; their n values are excluded and
    reported. If the full-grid fit has r^2 < 0.95 the smallest n is dropped
    once as a pre-asymptotic transient and the fit repeated.
    """
    means = table.mean_by_n(sigma)
    if len(means) < 4:
        raise ConfigError("slope fit needs at least 4 distinct n values")
    excluded = [n for n, (mean, _) in means.items() if mean <= 0.0]
    pairs = [(n, mean) for n, (mean, _) in means.items() if mean > 0.0]
    if len(pairs) < 2:
        raise ConfigError("slope fit needs at least 2 positive mean estimates")
    slope, intercept, r2 = _ols_loglog(pairs)
    if r2 < 0.95 and len(pairs) > 3:
        smallest = pairs[0][0]
        refit = pairs[1:]
        slope, intercept, r2 = _ols_loglog(refit)
        excluded.append(smallest)
        pairs = refit
    return SlopeFit(slope, intercept, r2, tuple(n for n, _ in pairs),
                    tuple(sorted(excluded)))


@dataclass(frozen=True)
class AxiomsConfig:
    """Design of a metric-axioms run over random discrete triples."""

    d: int = 3
    sigma: float = 1.0
    triples: int = 20
    atoms: int = 12
    m: int = 300
    trials: int = 4
    seed: int = 0
    noise_family: str = "gaussian"
    spread: float = 2.0

    def __post_init__(self):
        if self.d < 1 or self.triples < 1 or self.atoms < 1:
            raise ConfigError("d, triples, and atoms must be >= 1")
        if self.m < 2 or self.trials < 2:
            raise ConfigError("m and trials must be >= 2")
        NoiseModel(self.noise_family, self.sigma)


@dataclass(frozen=True)
class TriangleCheck:
    triple: int
    lhs: float
    rhs: float
    tolerance: float
    ok: bool


@dataclass(frozen=True)
class AxiomsReport:
    triangle: tuple
    triangle_violations: int
    symmetry_max_diff: float
    symmetry_exact: bool
    self_means: tuple
    self_decreasing: bool
    allowance: float
    passed: bool


def _random_discrete(rng, atoms: int, d: int, spread: float) -> DiscreteMeasure:
    pts = spread * rng.standard_normal((atoms, d))
    w = rng.random(atoms) + 0.1
    return DiscreteMeasure(pts, w / w.sum())


def run_metric_axioms(cfg: AxiomsConfig) -> AxiomsReport:
    """Statistical check of symmetry, triangle inequality, and vanishing
    self-distance on random discrete triples.

    Symmetry must hold bitwise under mirrored draw roles; the triangle
    inequality and the self-distance trend hold up to 3x pooled standard
    error plus the calibrated plug-in bias allowance.
    """
    noise = NoiseModel(cfg.noise_family, cfg.sigma)
    gen = _rng.stream(cfg.seed, "axioms", "measures")
    triples = [tuple(_random_discrete(gen, cfg.atoms, cfg.d, cfg.spread)
                     for _ in range(3)) for _ in range(cfg.triples)]

    cal = calibrate_bias_allowance(triples[0][0], noise, m=cfg.m,
                                   trials=max(cfg.trials, 4),
                                   seed=_rng.subseed(cfg.seed, "axioms", "cal"))
    allowance = cal.allowance(cfg.m)

    checks = []
    for k, (mu, nu, rho) in enumerate(triples):
        seed_k = _rng.subseed(cfg.seed, "axioms", "triangle", k)
        e_ab = estimate_got(mu, nu, noise, cfg.m, cfg.trials, _rng.subseed(seed_k, "ab"))
        e_bc = estimate_got(nu, rho, noise, cfg.m, cfg.trials, _rng.subseed(seed_k, "bc"))
        e_ac = estimate_got(mu, rho, noise, cfg.m, cfg.trials, _rng.subseed(seed_k, "ac"))
        se = math.sqrt(e_ab.std_err ** 2 + e_bc.std_err ** 2 + e_ac.std_err ** 2)
        tol = 3.0 * se + allowance
        lhs = e_ac.mean
        rhs = e_ab.mean + e_bc.mean
        checks.append(TriangleCheck(k, lhs, rhs, tol, lhs <= rhs + tol))

    mu, nu, _ = triples[0]
    sym_seed = _rng.subseed(cfg.seed, "axioms", "symmetry")
    fwd = estimate_got(mu, nu, noise, cfg.m, cfg.trials, sym_seed)
    rev = estimate_got(nu, mu, noise, cfg.m, cfg.trials, sym_seed, mirror=True)
    sym_diff = max(abs(a - b) for a, b in zip(fwd.values, rev.values))

    m_small = max(20, cfg.m // 4)
    self_seed = _rng.subseed(cfg.seed, "axioms", "self")
    s_small = estimate_got(mu, mu, noise, m_small, cfg.trials, _rng.subseed(self_seed, m_small))
    s_large = estimate_got(mu, mu, noise, cfg.m, cfg.trials, _rng.subseed(self_seed, cfg.m))
    self_dec = s_large.mean <= s_small.mean + 3.0 * pooled_std_err(s_small, s_large)

    violations = sum(1 for c in checks if not c.ok)
    return AxiomsReport(
        triangle=tuple(checks), triangle_violations=violations,
        symmetry_max_diff=sym_diff, symmetry_exact=sym_diff == 0.0,
        self_means=((m_small, s_small.mean), (cfg.m, s_large.mean)),
        self_decreasing=self_dec, allowance=allowance,
        passed=violations == 0 and sym_diff == 0.0 and self_dec)


@dataclass(frozen=True)
class PlanConfig:
    """Design of a small-noise cost-convergence run on one discrete pair."""

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    sigma_sequence: tuple = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0)
    m: int = 400
    trials: int = 6
    seed: int = 0
    noise_family: str = "gaussian"
    crn: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sigma_sequence",
                           tuple(float(s) for s in self.sigma_sequence))
        if self.mu.d != self.nu.d:
            raise ConfigError("measures must live in the same dimension")
        if any(s < 0 for s in self.sigma_sequence) or not self.sigma_sequence:
            raise ConfigError("sigma_sequence must be non-empty and >= 0")
        if list(self.sigma_sequence) != sorted(self.sigma_sequence, reverse=True):
            raise ConfigError("sigma_sequence must be decreasing")
        if not self.crn:
            raise ConfigError("plan convergence requires common random numbers")
        if self.noise_family != "gaussian":
            raise ConfigError("common-random-numbers mode requires gaussian noise")
        if self.m < 2 or self.trials < 2:
            raise ConfigError("m and trials must be >= 2")


@dataclass(frozen=True)
class PlanPoint:
    sigma: float
    mean: float
    std_err: float
    diff: float
    lower: float
    upper: float
    allowance: float
    ok: bool


@dataclass(frozen=True)
class PlanReport:
    w1_exact: float
    points: tuple
    passed: bool


def run_plan_convergence(cfg: PlanConfig) -> PlanReport:
    """Check that the smoothed estimate approaches the exact unsmoothed W1
    from within the stability envelope as sigma decreases.

    For each sigma the gap estimate(sigma) - W1_exact must lie in
    [-3 std_err, 2 sqrt(d) sigma + 3 std_err + bias allowance]; the sigma=0
    term is the exact solver output itself.
    """
    w1 = solve_transport(cfg.mu, cfg.nu).cost
    d = cfg.mu.d
    points = []
    for k, sigma in enumerate(cfg.sigma_sequence):
        if sigma == 0.0:
            points.append(PlanPoint(sigma, w1, 0.0, 0.0, 0.0, 0.0, 0.0, True))
            continue
        noise = NoiseModel(cfg.noise_family, sigma)
        est = estimate_got(cfg.mu, cfg.nu, noise, cfg.m, cfg.trials,
                           cfg.seed, crn=True)
        cal = calibrate_bias_allowance(cfg.mu, noise, m=cfg.m,
                                       trials=max(cfg.trials, 4),
                                       seed=_rng.subseed(cfg.seed, "plan-cal", k))
        allowance = cal.allowance(cfg.m)
        diff = est.mean - w1
        lower = -3.0 * est.std_err
        upper = 2.0 * math.sqrt(d) * sigma + 3.0 * est.std_err + allowance
        points.append(PlanPoint(sigma, est.mean, est.std_err, diff, lower,
                                upper, allowance, lower <= diff <= upper))
    return PlanReport(w1_exact=w1, points=tuple(points),
                      passed=all(p.ok for p in points))
