"""Closed-form bound calculators used as test envelopes and diagnostics.

Four quantities: the smoothing-stability gap, the parametric n^{-1/2}
estimation-rate constant, the bounded-support concentration tail, and the
envelope exponent parameter delta. All are pure formula evaluations; they
never gate estimation, since the constants are loose by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


def delta_param(sigma: float) -> float:
    """Envelope exponent parameter min(1, 1/(4 sigma^2))."""
    if sigma <= 0:
        raise ConfigError("delta_param needs sigma > 0")
    return min(1.0, 1.0 / (4.0 * sigma * sigma))


def stability_bound(sigma1: float, sigma2: float, d: int) -> float:
    """Worst-case gap 2 sqrt(d (sigma2^2 - sigma1^2)) between the smoothed
    distances at noise levels sigma1 < sigma2."""
    if d < 1:
        raise ConfigError("stability_bound needs d >= 1")
    if not 0 <= sigma1 < sigma2:
        raise ConfigError("stability_bound needs 0 <= sigma1 < sigma2")
    return 2.0 * math.sqrt(d * (sigma2 * sigma2 - sigma1 * sigma1))


def rate_bound(sigma: float, d: int, K: float, c1: float, n: int) -> float:
    """Estimation-rate constant c1^d sigma sqrt(2d) (1 + K/sigma)^(d/2+1)
    e^(3d/16) n^(-1/2) for a K-subgaussian source."""
    if sigma <= 0:
        raise ConfigError("rate_bound needs sigma > 0")
    if n < 1:
        raise ConfigError("rate_bound needs n >= 1")
    if c1 < 1:
        raise ConfigError("rate_bound needs c1 >= 1")
    if K < 0:
        raise ConfigError("rate_bound needs K >= 0")
    if d < 1:
        raise ConfigError("rate_bound needs d >= 1")
    return (c1 ** d * sigma * math.sqrt(2.0 * d)
            * (1.0 + K / sigma) ** (d / 2.0 + 1.0)
            * math.exp(3.0 * d / 16.0) / math.sqrt(n))


def concentration_bound(diam: float, n: int, t: float, capped: bool = False) -> float:
    """Two-sided deviation tail 2 exp(-2 t^2 n / diam^2) for the empirical
    smoothed distance on a support of the given diameter. capped clips the
    raw value at 1 so it reads as a probability."""
    if diam <= 0:
        raise ConfigError("concentration_bound needs diam > 0")
    if n < 1:
        raise ConfigError("concentration_bound needs n >= 1")
    if t <= 0:
        raise ConfigError("concentration_bound needs t > 0")
    raw = 2.0 * math.exp(-2.0 * t * t * n / (diam * diam))
    return min(raw, 1.0) if capped else raw


def concentration_threshold(diam: float, n: int, prob: float) -> float:
    """Deviation t at which the raw concentration tail equals prob."""
    if not 0 < prob < 2:
        raise ConfigError("concentration_threshold needs 0 < prob < 2")
    if diam <= 0 or n < 1:
        raise ConfigError("concentration_threshold needs diam > 0 and n >= 1")
    return diam * math.sqrt(math.log(2.0 / prob) / (2.0 * n))


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: formula name, the inputs it used, its value."""

    name: str
    inputs: dict
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ConfigError(f"bound {self.name} evaluated negative")


def bound_report(sigma: float, d: int, K: float, n: int,
                 c1: float | None = None, sigma2: float | None = None,
                 diam: float | None = None, t: float | None = None) -> list:
    """Evaluate every applicable bound for one parameter set.

    c1 defaults to 1, the exact envelope constant for gaussian noise (the
    smoothed reference density matches its own envelope); certificates from
    the noise module supply larger certified values for other families.
    Stability and concentration rows appear only when their extra inputs
    (sigma2, or diam and t) are given.
    """
    c1 = 1.0 if c1 is None else c1
    reports = [
        BoundReport("delta_param", {"sigma": sigma}, delta_param(sigma)),
        BoundReport("rate_bound", {"sigma": sigma, "d": d, "K": K, "c1": c1, "n": n},
                    rate_bound(sigma, d, K, c1, n)),
    ]
    if sigma2 is not None:
        reports.append(BoundReport(
            "stability_bound", {"sigma1": sigma, "sigma2": sigma2, "d": d},
            stability_bound(sigma, sigma2, d)))
    if diam is not None and t is not None:
        reports.append(BoundReport(
            "concentration_bound", {"diam": diam, "n": n, "t": t},
            concentration_bound(diam, n, t)))
        reports.append(BoundReport(
            "concentration_bound_capped", {"diam": diam, "n": n, "t": t},
            concentration_bound(diam, n, t, capped=True)))
    return reports
