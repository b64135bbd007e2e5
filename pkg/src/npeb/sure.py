"""Stein's unbiased risk estimator and Monte Carlo risk.

``sure_general`` works for any differentiable rule via the
integration-by-parts form; ``sure_bayes`` is the algebraically equivalent
specialization for posterior-mean rules, written directly in terms of the
marginal density ratios so the two routes stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixture import DecisionRule, MixingDistribution, Sample, posterior_stats, tweedie_rule


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    n: int
    std_error: float | None = None


def sure_general(rule: DecisionRule, s: Sample) -> RiskEstimate:
    """(1/n) sum_i [(delta(Y_i)-Y_i)^2 + 2 sigma^2 (delta'(Y_i)-1)] + sigma^2."""
    d = np.asarray(rule.delta(s.y), dtype=np.float64)
    dp = np.asarray(rule.delta_prime(s.y), dtype=np.float64)
    s2 = s.sigma * s.sigma
    value = float(np.mean((d - s.y) ** 2 + 2.0 * s2 * (dp - 1.0))) + s2
    return RiskEstimate(value, s.n)


def sure_bayes(g: MixingDistribution, s: Sample) -> RiskEstimate:
    """sigma^4 * mean_i [2 f''/f - (f'/f)^2](Y_i) + sigma^2, via posterior
    moments of the marginal density ratios."""
    _, m1, m2 = posterior_stats(g, s.y, s.sigma)
    s2 = s.sigma * s.sigma
    # sigma^4 f''/f = E[(theta-y)^2 | y] - sigma^2 ; sigma^2 f'/f = m1 - y
    e2 = m2 - 2.0 * s.y * m1 + s.y * s.y
    integrand = 2.0 * (e2 - s2) - (m1 - s.y) ** 2
    value = float(np.mean(integrand)) + s2
    return RiskEstimate(value, s.n)


def mc_risk(rule: DecisionRule, theta, sigma: float, reps: int,
            seed: int) -> RiskEstimate:
    """Average squared loss over ``reps`` seeded draws Y ~ N(theta, sigma^2 I).

    Rep r uses the RNG seeded by SeedSequence(seed, spawn_key=(r,)), so the
    stream is independent of any parallel execution order.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    theta = np.asarray(theta, dtype=np.float64)
    losses = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        y = theta + sigma * rng.standard_normal(theta.size)
        d = np.asarray(rule.delta(y), dtype=np.float64)
        losses[r] = np.mean((d - theta) ** 2)
    se = float(np.std(losses, ddof=1) / np.sqrt(reps))
    return RiskEstimate(float(np.mean(losses)), theta.size, se)
