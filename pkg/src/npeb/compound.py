"""Compound-decision estimators for a fixed mean vector.

``simple_estimator`` applies the posterior-mean rule under the empirical
distribution of the means coordinate by coordinate.  The permutation
estimator averages the mean vector over assignments of means to
observations, weighted by full-data likelihood: exactly for small n, and
by uniform-proposal self-normalized importance sampling otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mixture import InvalidInputError, MixingDistribution, Sample, logpdf_matrix, tweedie_rule

EXACT_N_LIMIT = 9
ESS_DEGENERACY_FLOOR = 10.0
_CHUNK = 8192


@dataclass(frozen=True)
class PermMCConfig:
    num_perms: int
    seed: int = 0

    def __post_init__(self):
        if self.num_perms < 1:
            raise InvalidInputError("num_perms must be >= 1")


@dataclass(frozen=True)
class PermResult:
    """Estimates plus importance-sampling diagnostics.

    ``ess`` is sum(w)/max(w); ``degenerate`` flags ess below 10.
    """

    estimates: np.ndarray
    ess: float
    degenerate: bool


def _check_lengths(theta, s: Sample) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != s.n:
        raise InvalidInputError("theta and sample lengths differ")
    return theta


def simple_estimator(theta, s: Sample) -> np.ndarray:
    """Posterior-mean rule under the empirical distribution of theta,
    applied per coordinate (duplicate theta values merge weight)."""
    theta = _check_lengths(theta, s)
    g = MixingDistribution.from_points(theta)
    return np.asarray(tweedie_rule(g, s.sigma).delta(s.y))


def perm_invariant_exact(theta, s: Sample) -> np.ndarray:
    """Exact likelihood-weighted average over all n! assignments of theta
    values to coordinates, in log-space.  Refuses n > 9."""
    theta = _check_lengths(theta, s)
    n = theta.size
    if n > EXACT_N_LIMIT:
        raise InvalidInputError(
            f"exact enumeration limited to n <= {EXACT_N_LIMIT}; "
            "use perm_invariant_mc")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    logpdf = logpdf_matrix(s.y, theta, s.sigma)
    scores = logpdf[np.arange(n), perms].sum(axis=1)
    w = np.exp(scores - scores.max())
    return (w @ theta[perms]) / w.sum()


def _sinkhorn_balance(logpdf, iters: int = 100):
    """Log-space Sinkhorn scaling toward a doubly stochastic matrix.

    A fixed iteration count keeps the result a deterministic function of
    the input.
    """
    from scipy.special import logsumexp

    lr = np.zeros(logpdf.shape[0])
    lc = np.zeros(logpdf.shape[1])
    for _ in range(iters):
        lr = -logsumexp(logpdf + lc[None, :], axis=1)
        lc = -logsumexp(logpdf + lr[:, None], axis=0)
    return logpdf + lr[:, None] + lc[None, :]


def perm_invariant_mc(theta, s: Sample, cfg: PermMCConfig) -> PermResult:
    """Self-normalized importance-sampling approximation of the
    permutation estimator.

    Permutations are sampled with a likelihood-biased sequential proposal:
    coordinate k receives a still-unassigned mean with probability
    proportional to the (Sinkhorn-balanced) likelihood of that assignment.
    Balancing the matrix to doubly stochastic sharpens the proposal without
    changing the target: a permutation hits every row and column exactly
    once, so the scaling factors contribute the same constant to every
    permutation's likelihood and cancel under self-normalization.  Each
    sampled permutation carries the importance weight target/proposal in
    log-space, so the weighted average converges to the exact permutation
    estimator.  The permutation stream is a pure function of ``cfg.seed``;
    chunks are combined with running max-rescaling, so memory stays
    O(chunk * n) and results are deterministic.
    """
    theta = _check_lengths(theta, s)
    n = theta.size
    scaled = _sinkhorn_balance(logpdf_matrix(s.y, theta, s.sigma))
    logpdf = np.ascontiguousarray(scaled)
    rowmax = np.ascontiguousarray(logpdf.max(axis=1))
    prob = np.ascontiguousarray(np.exp(logpdf - rowmax[:, None]))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))

    num = np.zeros(n)      # sum of w_b * theta[perm_b], rescaled by exp(-gmax)
    den = 0.0
    gmax = -np.inf
    remaining = cfg.num_perms
    while remaining > 0:
        c = min(_CHUNK, remaining)
        u = rng.random((c, n))
        perms = np.empty((c, n), dtype=np.int64)
        logw = np.empty(c)
        _kernels.perm_sample(logpdf, rowmax, prob, u, perms, logw)
        cmax = float(logw.max())
        new_max = max(gmax, cmax)
        scale = math.exp(gmax - new_max) if np.isfinite(gmax) else 0.0
        w = np.exp(logw - new_max)
        num = num * scale + w @ theta[perms]
        den = den * scale + float(w.sum())
        gmax = new_max
        remaining -= c

    ess = den  # weights are scaled so the largest is exactly 1
    return PermResult(num / den, ess, ess < ESS_DEGENERACY_FLOOR)
