"""Normal-mixture marginals and the Tweedie posterior-mean rule.

A mixing distribution G with atoms theta_j and weights w_j induces the
marginal density f_G(y) = sum_j w_j phi((y - theta_j)/sigma)/sigma of a
noisy observation Y ~ N(theta, sigma^2), theta ~ G.  Everything here is
evaluated in log-space so tails out to tens of sigma stay finite, and the
derivative quantities are obtained from posterior moments E[theta | y],
E[theta^2 | y] rather than raw density-derivative ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class InvalidInputError(ValueError):
    """Raised when a domain object is constructed from invalid data."""


def _as_readonly(a, dtype=np.float64):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MixingDistribution:
    """A discrete distribution over means: strictly increasing atoms,
    nonnegative weights summing to one.

    ``support_bound`` is the declared c with all atoms in [-c, c]; it
    defaults to max|atom|.
    """

    atoms: np.ndarray
    weights: np.ndarray
    support_bound: float | None = None

    def __post_init__(self):
        atoms = _as_readonly(np.atleast_1d(self.atoms))
        weights = _as_readonly(np.atleast_1d(self.weights))
        if atoms.size == 0:
            raise InvalidInputError("mixing distribution needs at least one atom")
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise InvalidInputError("atoms and weights must be 1-d and equal length")
        if not np.all(np.isfinite(atoms)):
            raise InvalidInputError("atoms must be finite")
        if atoms.size > 1 and not np.all(np.diff(atoms) > 0):
            raise InvalidInputError("atoms must be strictly increasing")
        if np.any(weights < 0):
            raise InvalidInputError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise InvalidInputError("weights must sum to 1 within 1e-12")
        bound = self.support_bound
        if bound is None:
            bound = float(np.max(np.abs(atoms)))
        elif np.any(np.abs(atoms) > bound):
            raise InvalidInputError("atoms exceed the declared support bound")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "support_bound", float(bound))

    @classmethod
    def from_points(cls, values) -> "MixingDistribution":
        """Empirical distribution of a value vector; duplicates merge weight."""
        values = np.asarray(values, dtype=np.float64)
        atoms, counts = np.unique(values, return_counts=True)
        return cls(atoms, counts / values.size)

    @property
    def n_atoms(self) -> int:
        return int(self.atoms.size)


@dataclass(frozen=True)
class Sample:
    """Observation vector with known noise standard deviation."""

    y: np.ndarray
    sigma: float

    def __post_init__(self):
        y = _as_readonly(np.atleast_1d(self.y))
        if y.size == 0 or not np.all(np.isfinite(y)):
            raise InvalidInputError("observations must be nonempty and finite")
        if not (self.sigma > 0):
            raise InvalidInputError("sigma must be positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def n(self) -> int:
        return int(self.y.size)


@dataclass(frozen=True)
class DensityBundle:
    """Marginal density f_G(y) with its first two y-derivatives.

    ``logf`` is carried alongside so extreme tails (where f itself is
    denormal) remain usable.
    """

    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    logf: np.ndarray


@dataclass(frozen=True)
class DecisionRule:
    """An evaluable rule y -> delta(y) with an evaluable derivative."""

    delta: Callable[[np.ndarray], np.ndarray]
    delta_prime: Callable[[np.ndarray], np.ndarray]
    name: str = ""


def logpdf_matrix(y, atoms, sigma):
    """log of the sigma-scaled normal kernel, shape (len(y), len(atoms))."""
    z = (np.asarray(y, dtype=np.float64)[:, None] - np.asarray(atoms)[None, :]) / sigma
    return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI


def posterior_stats(g: MixingDistribution, y, sigma: float):
    """Return (logf, m1, m2): log marginal density and the first two
    posterior moments of theta given each observation."""
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    with np.errstate(divide="ignore"):
        logw = np.log(g.weights)
    logk = logpdf_matrix(y, g.atoms, sigma) + logw[None, :]
    shift = logk.max(axis=1)
    p = np.exp(logk - shift[:, None])
    s = p.sum(axis=1)
    logf = np.log(s) + shift
    p /= s[:, None]
    m1 = p @ g.atoms
    m2 = p @ (g.atoms * g.atoms)
    return logf, m1, m2


def marginal_density(g: MixingDistribution, y, sigma: float) -> DensityBundle:
    """f_G(y) and its first two derivatives in y (log-sum-exp throughout)."""
    yv = np.atleast_1d(np.asarray(y, dtype=np.float64))
    logf, m1, m2 = posterior_stats(g, yv, sigma)
    f = np.exp(logf)
    s2 = sigma * sigma
    # f'/f = (E[theta|y] - y)/sigma^2 ; f''/f = (E[(theta-y)^2|y] - sigma^2)/sigma^4
    e2 = m2 - 2.0 * yv * m1 + yv * yv
    f1 = f * (m1 - yv) / s2
    f2 = f * (e2 - s2) / (s2 * s2)
    if np.isscalar(y) or np.ndim(y) == 0:
        return DensityBundle(f[0], f1[0], f2[0], logf[0])
    return DensityBundle(f, f1, f2, logf)


def tweedie_rule(g: MixingDistribution, sigma: float) -> DecisionRule:
    """Posterior-mean rule delta(y) = y + sigma^2 f'_G(y)/f_G(y).

    The derivative is Var(theta | y)/sigma^2, computed from posterior
    moments, never by numerical differentiation.
    """
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    s2 = sigma * sigma

    def delta(y):
        _, m1, _ = posterior_stats(g, y, sigma)
        return m1 if np.ndim(y) else m1[0]

    def delta_prime(y):
        _, m1, m2 = posterior_stats(g, y, sigma)
        v = np.maximum(m2 - m1 * m1, 0.0) / s2
        return v if np.ndim(y) else v[0]

    return DecisionRule(delta, delta_prime, name="tweedie")


def posterior_variance(g: MixingDistribution, sigma: float, y) -> float | np.ndarray:
    """Var(theta | Y=y) under prior g; lies in [0, c^2]."""
    _, m1, m2 = posterior_stats(g, y, sigma)
    v = np.maximum(m2 - m1 * m1, 0.0)
    return v if np.ndim(y) else float(v[0])


def loglik(g: MixingDistribution, s: Sample) -> float:
    """sum_i log f_G(Y_i), including the Gaussian normalizing constant."""
    logf, _, _ = posterior_stats(g, s.y, s.sigma)
    return float(logf.sum())


def identity_rule() -> DecisionRule:
    return DecisionRule(lambda y: np.asarray(y, dtype=np.float64) + 0.0,
                        lambda y: np.ones_like(np.asarray(y, dtype=np.float64)),
                        name="identity")


def constant_rule(a: float) -> DecisionRule:
    return DecisionRule(lambda y: np.full_like(np.asarray(y, dtype=np.float64), a),
                        lambda y: np.zeros_like(np.asarray(y, dtype=np.float64)),
                        name=f"constant({a})")
