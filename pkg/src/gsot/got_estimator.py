"""Monte Carlo plug-in estimation of smoothed 1-Wasserstein distances.

The smoothed distance between measures is the exact W1 between their noise
convolutions. Sampling from a convolution is sampling the base measure plus
an independent noise draw, so each trial builds two m-point clouds that way
and solves the discrete problem exactly. estimate_got compares two given
measures (or sources); estimate_one_sample targets the distance between an
n-sample empirical measure and the source it was drawn from.

The plug-in value carries an upward discretization bias from comparing two
finite clouds; calibrate_bias_allowance measures it on a self-distance run
(identical measures, independent draws) and statistical assertions budget
2 * c_est / sqrt(m) for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .errors import ConfigError
from .measures import DiscreteMeasure, SourceSpec, sample_source
from .noise import NoiseModel, standard_draw
from .ot_exact import w1_uniform_clouds


@dataclass(frozen=True)
class Estimate:
    """Aggregated Monte Carlo estimate: mean and standard error across
    trials, with the per-trial values kept for pooled comparisons."""

    mean: float
    std_err: float
    trials: int
    m: int
    sigma: float
    bias_note: str
    values: tuple

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")


def _aggregate(values, m, sigma, note) -> Estimate:
    values = [float(v) for v in values]
    t = len(values)
    mean = math.fsum(values) / t
    if t > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (t - 1)
        se = math.sqrt(var / t)
    else:
        se = 0.0
    return Estimate(mean=mean, std_err=se, trials=t, m=m, sigma=sigma,
                    bias_note=note, values=tuple(values))


def pooled_std_err(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.std_err, b.std_err)


def _noise_key(noise: NoiseModel, crn: bool):
    """Seed-path component for noise draws. Shared-draw mode keys the
    standard draws independently of sigma so a sigma sweep reuses them."""
    if crn:
        if noise.family != "gaussian":
            raise ConfigError("common-random-numbers mode requires gaussian noise")
        return "std"
    return noise.sigma


def _draw_atoms(source, m, rng):
    """m base points: fresh samples for a SourceSpec, weighted resample with
    replacement for a DiscreteMeasure."""
    if isinstance(source, SourceSpec):
        return sample_source(source, m, rng)
    if isinstance(source, DiscreteMeasure):
        idx = rng.choice(source.n, size=m, p=source.weights)
        return source.atoms[idx]
    raise ConfigError("expected a DiscreteMeasure or SourceSpec")


def _dim(source) -> int:
    return source.d if isinstance(source, SourceSpec) else source.d


def two_sample_trial(mu, nu, noise: NoiseModel, m: int, seed, trial: int,
                     crn: bool = False, mirror: bool = False) -> float:
    """One plug-in trial for W1 between the smoothed mu and nu.

    mirror swaps the two draw roles, so two_sample_trial(nu, mu, ...,
    mirror=True) rebuilds the identical clouds in the opposite order.
    """
    key = _noise_key(noise, crn)
    ra, rb = ("b", "a") if mirror else ("a", "b")
    d = _dim(mu)
    atoms_a = _draw_atoms(mu, m, _rng.stream(seed, "atoms", ra, trial, key))
    atoms_b = _draw_atoms(nu, m, _rng.stream(seed, "atoms", rb, trial, key))
    if noise.sigma > 0:
        za = standard_draw(noise.family, (m, d), _rng.stream(seed, "noise", ra, trial, key))
        zb = standard_draw(noise.family, (m, d), _rng.stream(seed, "noise", rb, trial, key))
        atoms_a = atoms_a + noise.sigma * za
        atoms_b = atoms_b + noise.sigma * zb
    return w1_uniform_clouds(atoms_a, atoms_b)


def estimate_got(mu, nu, noise: NoiseModel, m: int, trials: int, seed,
                 crn: bool = False, mirror: bool = False) -> Estimate:
    """Plug-in estimate of the smoothed W1 between mu and nu.

    Each trial draws independent m-point clouds from the two smoothed
    measures and solves the assignment exactly. With sigma == 0 this is the
    exact W1 between the raw sample clouds.
    """
    if _dim(mu) != _dim(nu):
        raise ConfigError("measures must live in the same dimension")
    if m < 1 or trials < 1:
        raise ConfigError("m and trials must be >= 1")
    vals = [two_sample_trial(mu, nu, noise, m, seed, t, crn=crn, mirror=mirror)
            for t in range(trials)]
    return _aggregate(vals, m, noise.sigma, "two-sample plug-in, independent noise")


def one_sample_trial(source: SourceSpec, noise: NoiseModel, n: int, m: int,
                     seed, trial: int, crn: bool = False) -> float:
    """One trial of the empirical-vs-source smoothed distance: cloud A
    resamples m atoms of a fresh n-point empirical measure, cloud B takes m
    fresh source samples, both plus noise."""
    if m < n:
        raise ConfigError("m must be >= n; a smaller cloud would drop atoms "
                          "of the empirical measure systematically")
    key = _noise_key(noise, crn)
    d = source.d
    base = sample_source(source, n, _rng.stream(seed, "empirical", trial, key))
    if m == n:
        # the smoothed empirical measure has exactly n equal-weight
        # components; one draw per component discretizes it without
        # resampling noise
        atoms_a = base
    else:
        idx = _rng.stream(seed, "resample", trial, key).integers(0, n, size=m)
        atoms_a = base[idx]
    atoms_b = sample_source(source, m, _rng.stream(seed, "fresh", trial, key))
    if noise.sigma > 0:
        za = standard_draw(noise.family, (m, d), _rng.stream(seed, "noise", "a", trial, key))
        zb = standard_draw(noise.family, (m, d), _rng.stream(seed, "noise", "b", trial, key))
        atoms_a = atoms_a + noise.sigma * za
        atoms_b = atoms_b + noise.sigma * zb
    return w1_uniform_clouds(atoms_a, atoms_b)


def estimate_one_sample(source: SourceSpec, noise: NoiseModel, n: int, m: int,
                        trials: int, seed, crn: bool = False) -> Estimate:
    """Plug-in estimate of E W1 between the smoothed n-point empirical
    measure and its smoothed source."""
    if n < 1 or m < 1 or trials < 1:
        raise ConfigError("n, m, and trials must be >= 1")
    vals = [one_sample_trial(source, noise, n, m, seed, t, crn=crn)
            for t in range(trials)]
    return _aggregate(vals, m, noise.sigma, "one-sample plug-in, resample vs fresh")


@dataclass(frozen=True)
class BiasCalibration:
    """Self-distance calibration: mean_self is the plug-in value at mu == nu
    where the true distance is 0, so it measures the discretization bias at
    the calibration m; c_est extrapolates it as c_est / sqrt(m)."""

    c_est: float
    m_ref: int
    mean_self: float
    sigma: float

    def allowance(self, m: int | None = None) -> float:
        m = self.m_ref if m is None else m
        return 2.0 * self.c_est / math.sqrt(m)


def calibrate_bias_allowance(source, noise: NoiseModel, m: int, trials: int,
                             seed) -> BiasCalibration:
    """Measure the plug-in bias by a self-distance run with independent
    draws on both sides."""
    est = estimate_got(source, source, noise, m=m, trials=trials,
                       seed=_rng.subseed(seed, "bias-calibration"))
    return BiasCalibration(c_est=est.mean * math.sqrt(m), m_ref=m,
                           mean_self=est.mean, sigma=noise.sigma)
