"""Scenario generation for the simulation harness.

Three scenario kinds:

* ``iid-prior`` — means drawn iid from a mixture-of-normals prior each
  trial (components with sd 0 are point masses, so discrete priors are a
  special case);
* ``fixed-theta`` — a given mean vector, fresh noise each trial;
* ``clusters`` — means tau_i + xi_i with tau_i/c_n uniform on {1..k_n}
  and xi_i ~ N(0,1), fresh each trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .mixture import DecisionRule, InvalidInputError, MixingDistribution, Sample

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianMixturePrior:
    """Mixture of normals sum_k w_k N(mu_k, tau_k^2); tau_k = 0 allowed."""

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_1d(np.asarray(self.means, dtype=np.float64))
        sd = np.atleast_1d(np.asarray(self.sds, dtype=np.float64))
        if not (w.shape == mu.shape == sd.shape) or w.ndim != 1:
            raise InvalidInputError("prior arrays must be 1-d and equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError("prior weights must be a probability vector")
        if np.any(sd < 0):
            raise InvalidInputError("prior sds must be nonnegative")
        for name, arr in (("weights", w), ("means", mu), ("sds", sd)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixturePrior":
        try:
            return cls(d["weights"], d["means"], d["sds"])
        except KeyError as e:
            raise InvalidInputError(f"prior spec missing field {e}") from e

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(),
                "sds": self.sds.tolist()}

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        return self.means[comp] + self.sds[comp] * rng.standard_normal(n)

    def mean(self) -> float:
        return float(self.weights @ self.means)

    def as_mixing_distribution(self) -> MixingDistribution:
        """Available only when every component is a point mass."""
        if np.any(self.sds > 0):
            raise InvalidInputError("prior has continuous components")
        order = np.argsort(self.means)
        return MixingDistribution(self.means[order], self.weights[order])

    def _component_posteriors(self, y, sigma: float):
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        tau2 = self.sds ** 2
        s2 = tau2 + sigma * sigma
        z = (y[:, None] - self.means[None, :])
        logp = (np.log(self.weights)[None, :] - 0.5 * z * z / s2[None, :]
                - 0.5 * np.log(s2)[None, :] - _LOG_SQRT_2PI)
        logp -= logp.max(axis=1, keepdims=True)
        p = np.exp(logp)
        p /= p.sum(axis=1, keepdims=True)
        # per-component posterior mean/variance of theta given y
        m = (tau2[None, :] * y[:, None] + (sigma * sigma) * self.means[None, :]) / s2[None, :]
        v = tau2 * sigma * sigma / s2
        return p, m, v

    def rule(self, sigma: float) -> DecisionRule:
        """Exact posterior-mean rule under this prior (the oracle rule)."""
        s2 = sigma * sigma

        def delta(y):
            p, m, _ = self._component_posteriors(y, sigma)
            out = (p * m).sum(axis=1)
            return out if np.ndim(y) else out[0]

        def delta_prime(y):
            p, m, v = self._component_posteriors(y, sigma)
            e1 = (p * m).sum(axis=1)
            e2 = (p * (v[None, :] + m * m)).sum(axis=1)
            out = np.maximum(e2 - e1 * e1, 0.0) / s2
            return out if np.ndim(y) else out[0]

        return DecisionRule(delta, delta_prime, name="oracle-bayes")

    def bayes_risk(self, sigma: float, epsrel: float = 1e-9) -> float:
        """R(G, delta_G) = E Var(theta | Y) by adaptive quadrature over the
        marginal density of Y."""
        tau2 = self.sds ** 2
        s2m = tau2 + sigma * sigma

        def integrand(t):
            yv = np.array([t])
            p, m, v = self._component_posteriors(yv, sigma)
            var = (p * (v[None, :] + m * m)).sum(axis=1) - ((p * m).sum(axis=1)) ** 2
            zz = (t - self.means) / np.sqrt(s2m)
            fy = float(np.sum(self.weights * np.exp(-0.5 * zz * zz)
                              / np.sqrt(2.0 * math.pi * s2m)))
            return float(var[0]) * fy

        lo = float((self.means - 12.0 * np.sqrt(s2m)).min())
        hi = float((self.means + 12.0 * np.sqrt(s2m)).max())
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0,
                                epsrel=epsrel, limit=400,
                                points=sorted(self.means.tolist()))
        return val


VALID_KINDS = ("iid-prior", "fixed-theta", "clusters")


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int
    sigma: float
    prior: Optional[GaussianMixturePrior] = None
    theta: Optional[np.ndarray] = None
    c_n: Optional[float] = None
    k_n: Optional[int] = None

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise InvalidInputError(f"unknown scenario kind {self.kind!r}")
        if not (self.sigma > 0):
            raise InvalidInputError("sigma must be positive")
        if self.kind == "iid-prior":
            if self.prior is None or self.theta is not None or \
                    self.c_n is not None or self.k_n is not None:
                raise InvalidInputError("iid-prior needs exactly {prior, n, sigma}")
        elif self.kind == "fixed-theta":
            if self.theta is None or self.prior is not None or \
                    self.c_n is not None or self.k_n is not None:
                raise InvalidInputError("fixed-theta needs exactly {theta, sigma}")
            theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64))
            if not np.all(np.isfinite(theta)):
                raise InvalidInputError("theta must be finite")
            if self.n != theta.size:
                raise InvalidInputError("n must equal len(theta)")
            theta.setflags(write=False)
            object.__setattr__(self, "theta", theta)
        else:  # clusters
            if self.c_n is None or self.k_n is None or self.prior is not None \
                    or self.theta is not None:
                raise InvalidInputError("clusters needs exactly {c_n, k_n, n, sigma}")
            if self.k_n < 1:
                raise InvalidInputError("k_n must be >= 1")
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        kind = d.get("kind")
        if kind == "fixed-theta":
            theta = d.get("theta")
            n = d.get("n", len(theta) if theta is not None else 0)
        else:
            theta, n = None, d.get("n", 0)
        prior = GaussianMixturePrior.from_dict(d["prior"]) if "prior" in d else None
        return cls(kind=kind, n=int(n), sigma=float(d.get("sigma", 0.0)),
                   prior=prior, theta=theta,
                   c_n=d.get("c_n"), k_n=d.get("k_n"))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "sigma": self.sigma}
        if self.prior is not None:
            out["prior"] = self.prior.to_dict()
        if self.theta is not None:
            out["theta"] = self.theta.tolist()
        if self.c_n is not None:
            out["c_n"] = self.c_n
        if self.k_n is not None:
            out["k_n"] = self.k_n
        return out


def generate_scenario(spec: ScenarioSpec, trial_seed) -> tuple[np.ndarray, Sample]:
    """Draw (theta, sample) for one trial.  ``trial_seed`` may be an int or
    a SeedSequence."""
    rng = np.random.default_rng(trial_seed)
    if spec.kind == "iid-prior":
        theta = spec.prior.sample(spec.n, rng)
    elif spec.kind == "fixed-theta":
        theta = np.array(spec.theta)
    else:
        tau = spec.c_n * rng.integers(1, spec.k_n + 1, size=spec.n)
        theta = tau + rng.standard_normal(spec.n)
    y = theta + spec.sigma * rng.standard_normal(spec.n)
    return theta, Sample(y, spec.sigma)
