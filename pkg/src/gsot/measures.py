"""Finitely supported measures and parametric sampling sources."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .errors import ConfigError

WEIGHT_TOL = 1e-12

FAMILIES = ("uniform-cube", "isotropic-gaussian", "gaussian-mixture", "dirac-pair")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure sum_i weights[i] * delta_{atoms[i]}.

    atoms is (k, d), weights is (k,) with nonnegative entries summing to 1
    within WEIGHT_TOL. Arrays are copied and frozen at construction.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise ConfigError("atoms must be a nonempty (k, d) array")
        if not np.all(np.isfinite(atoms)):
            raise ConfigError("atoms must be finite")
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != atoms.shape[0]:
            raise ConfigError("need exactly one weight per atom")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ConfigError("weights must be finite and nonnegative")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights must sum to 1 within {WEIGHT_TOL}")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def d(self) -> int:
        return self.atoms.shape[1]


def make_empirical(samples) -> DiscreteMeasure:
    """Uniform-weight empirical measure of a sample array; duplicates kept."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    n = samples.shape[0]
    return DiscreteMeasure(samples, np.full(n, 1.0 / n))


def first_moment(measure: DiscreteMeasure) -> float:
    """E ||X|| under the measure."""
    return float(np.sum(measure.weights * np.linalg.norm(measure.atoms, axis=1)))


@dataclass(frozen=True)
class SourceSpec:
    """Sampling source with a certified subgaussian constant K.

    K certifies E exp(a . (X - EX)) <= exp(K^2 |a|^2 / 2) for all vectors a:
    exact for gaussians, half-range Hoeffding for bounded support, and
    quadrature combination for mixtures. Passing K explicitly is allowed but
    it must not undercut the certified value.
    """

    family: str
    d: int
    side: float = 1.0            # uniform-cube edge length
    std: float = 1.0             # gaussian / mixture component std
    means: tuple = ()            # mixture component means
    mix_weights: tuple = ()      # mixture component weights
    x: tuple = ()                # dirac-pair points
    y: tuple = ()
    K: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown source family {self.family!r}")
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError("d must be a positive int")
        if self.family == "uniform-cube":
            if not (math.isfinite(self.side) and self.side > 0):
                raise ConfigError("uniform-cube needs side > 0")
        elif self.family == "isotropic-gaussian":
            if not (math.isfinite(self.std) and self.std > 0):
                raise ConfigError("isotropic-gaussian needs std > 0")
        elif self.family == "gaussian-mixture":
            means = tuple(tuple(float(v) for v in m) for m in self.means)
            if not means or any(len(m) != self.d for m in means):
                raise ConfigError("mixture means must be nonempty d-vectors")
            w = np.array(self.mix_weights if self.mix_weights else
                         [1.0 / len(means)] * len(means), dtype=np.float64)
            if w.shape != (len(means),) or np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise ConfigError("mixture weights must be nonnegative and sum to 1")
            if not (math.isfinite(self.std) and self.std > 0):
                raise ConfigError("gaussian-mixture needs std > 0")
            object.__setattr__(self, "means", means)
            object.__setattr__(self, "mix_weights", tuple(float(v) for v in w))
        elif self.family == "dirac-pair":
            x = tuple(float(v) for v in self.x)
            y = tuple(float(v) for v in self.y)
            if len(x) != self.d or len(y) != self.d:
                raise ConfigError("dirac-pair needs d-vectors x and y")
            if not all(math.isfinite(v) for v in x + y):
                raise ConfigError("dirac-pair points must be finite")
            if x == y:
                raise ConfigError("dirac-pair needs x != y")
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "y", y)
        certified = self._certified_K()
        if self.K is None:
            object.__setattr__(self, "K", certified)
        elif self.K < certified - 1e-12:
            raise ConfigError(
                f"K={self.K} undercuts the certified subgaussian constant {certified}")

    def _certified_K(self) -> float:
        if self.family == "uniform-cube":
            return self.side / 2.0
        if self.family == "isotropic-gaussian":
            return float(self.std)
        if self.family == "gaussian-mixture":
            means = np.asarray(self.means, dtype=np.float64)
            w = np.asarray(self.mix_weights, dtype=np.float64)
            center = w @ means
            radius = float(np.max(np.linalg.norm(means - center, axis=1)))
            return math.sqrt(self.std ** 2 + radius ** 2)
        return 0.0  # point masses

    def dirac_components(self) -> tuple[DiscreteMeasure, DiscreteMeasure]:
        """The two point masses of a dirac-pair, as one-atom measures."""
        if self.family != "dirac-pair":
            raise ConfigError("dirac_components only applies to dirac-pair")
        return (DiscreteMeasure(np.array([self.x]), np.array([1.0])),
                DiscreteMeasure(np.array([self.y]), np.array([1.0])))


def sample_source(spec: SourceSpec, n: int, rng, component: int = 0) -> np.ndarray:
    """Draw n i.i.d. samples from the source as an (n, d) array.

    rng is a numpy Generator or an int seed. For dirac-pair sources,
    component selects which point mass is sampled (default the first).
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if not isinstance(rng, np.random.Generator):
        rng = _rng.stream(rng, "source")
    d = spec.d
    if spec.family == "uniform-cube":
        return rng.random((n, d)) * spec.side
    if spec.family == "isotropic-gaussian":
        return rng.standard_normal((n, d)) * spec.std
    if spec.family == "gaussian-mixture":
        means = np.asarray(spec.means, dtype=np.float64)
        comp = rng.choice(len(means), size=n, p=np.asarray(spec.mix_weights))
        return means[comp] + spec.std * rng.standard_normal((n, d))
    point = spec.x if component == 0 else spec.y
    return np.tile(np.asarray(point, dtype=np.float64), (n, 1))
