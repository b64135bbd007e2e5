"""Seeded experiment runner: per-trial scenario generation, estimator
evaluation, squared-loss accounting, and the regret-rate check.

Seeding contract: trial t of an experiment with base seed S derives all of
its randomness from ``SeedSequence(S, spawn_key=(t,))`` (scenario draw) and
``SeedSequence(S, spawn_key=(t, 1))`` (permutation sampler).  Trials are
therefore independent of execution order and worker count; reports are
bit-identical for a fixed config + seed.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .compound import PermMCConfig, perm_invariant_mc, simple_estimator
from .mixture import InvalidInputError, Sample, tweedie_rule
from .npmle import EMConfig, default_grid, fit_npmle, GridSpec
from .scenarios import GaussianMixturePrior, ScenarioSpec, generate_scenario

ESTIMATOR_NAMES = ("npmle-tweedie", "oracle-bayes", "simple", "perm-mc", "identity")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    estimators: tuple[str, ...]
    trials: int
    seed: int = 0
    grid_m: Optional[int] = None
    em: EMConfig = field(default_factory=EMConfig)
    num_perms: int = 100_000
    keep_losses: bool = False

    def __post_init__(self):
        est = tuple(self.estimators)
        if not est:
            raise InvalidInputError("estimator set must be nonempty")
        for name in est:
            if name not in ESTIMATOR_NAMES:
                raise InvalidInputError(f"unknown estimator {name!r}")
        if "oracle-bayes" in est and self.scenario.kind != "iid-prior":
            raise InvalidInputError(
                "oracle-bayes needs an iid-prior scenario (true prior unknown otherwise)")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        object.__setattr__(self, "estimators", est)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        npmle = d.get("npmle", {})
        em = EMConfig(
            max_iters=npmle.get("max_iters", 5000),
            rel_tol=npmle.get("rel_tol", 1e-9),
            prune_eps=npmle.get("prune_eps", 1e-10),
            early_stop_iters=npmle.get("early_stop_iters"),
        )
        return cls(
            scenario=ScenarioSpec.from_dict(d["scenario"]),
            estimators=tuple(d["estimators"]),
            trials=int(d["trials"]),
            seed=int(d.get("seed", 0)),
            grid_m=npmle.get("grid_m"),
            em=em,
            num_perms=int(d.get("perm", {}).get("num_perms", 100_000)),
            keep_losses=bool(d.get("keep_losses", False)),
        )

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "estimators": list(self.estimators),
            "trials": self.trials,
            "seed": self.seed,
            "npmle": {
                "grid_m": self.grid_m,
                "max_iters": self.em.max_iters,
                "rel_tol": self.em.rel_tol,
                "prune_eps": self.em.prune_eps,
                "early_stop_iters": self.em.early_stop_iters,
            },
            "perm": {"num_perms": self.num_perms},
            "keep_losses": self.keep_losses,
        }


@dataclass(frozen=True)
class RiskReport:
    """Per-estimator mean loss and standard error over the trials."""

    mean_loss: dict[str, float]
    std_error: dict[str, float]
    trials: int
    config: dict
    wall_time_s: float
    losses: Optional[dict[str, list[float]]] = None

    def to_json(self, include_timing: bool = False) -> str:
        """Deterministic JSON: timing is excluded by default so identical
        config + seed yields byte-identical output."""
        payload = {
            "config": self.config,
            "trials": self.trials,
            "estimators": {
                name: {"mean_loss": self.mean_loss[name],
                       "std_error": self.std_error[name]}
                for name in sorted(self.mean_loss)
            },
        }
        if self.losses is not None and self.config.get("keep_losses"):
            payload["losses"] = {k: self.losses[k] for k in sorted(self.losses)}
        if include_timing:
            payload["wall_time_s"] = self.wall_time_s
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(trial,))


def _perm_seed(base_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(trial, 1)).generate_state(1)[0])


def run_trial(cfg: ExperimentConfig, t: int) -> dict[str, float]:
    """Losses of every requested estimator on trial t."""
    theta, s = generate_scenario(cfg.scenario, trial_seed(cfg.seed, t))

    def loss(est):
        return float(np.mean((np.asarray(est) - theta) ** 2))

    out: dict[str, float] = {}
    fitted_rule = None
    for name in cfg.estimators:
        if name == "identity":
            out[name] = loss(s.y)
        elif name == "simple":
            out[name] = loss(simple_estimator(theta, s))
        elif name == "perm-mc":
            res = perm_invariant_mc(
                theta, s, PermMCConfig(cfg.num_perms, _perm_seed(cfg.seed, t)))
            out[name] = loss(res.estimates)
        elif name == "oracle-bayes":
            out[name] = loss(cfg.scenario.prior.rule(s.sigma).delta(s.y))
        else:  # npmle-tweedie: uses only Y
            if fitted_rule is None:
                grid = default_grid(s, cfg.grid_m)
                fit = fit_npmle(s, grid, cfg.em)
                fitted_rule = tweedie_rule(fit.g_hat, s.sigma)
            out[name] = loss(fitted_rule.delta(s.y))
    return out


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RiskReport:
    """Run all trials and aggregate mean loss and SE per estimator.

    ``workers`` only changes wall time, never results: trials are seeded
    individually and aggregated in trial order.
    """
    start = time.perf_counter()
    if workers <= 1:
        rows = [run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_trial, [cfg] * cfg.trials,
                                 range(cfg.trials), chunksize=1))
    mean_loss, std_error, losses = {}, {}, {}
    for name in cfg.estimators:
        arr = np.array([r[name] for r in rows])
        mean_loss[name] = float(arr.mean())
        sd = float(arr.std(ddof=1)) if cfg.trials > 1 else 0.0
        std_error[name] = sd / math.sqrt(cfg.trials)
        losses[name] = arr.tolist()
    return RiskReport(
        mean_loss=mean_loss,
        std_error=std_error,
        trials=cfg.trials,
        config=cfg.to_dict(),
        wall_time_s=time.perf_counter() - start,
        losses=losses,
    )


def rate_check(prior: GaussianMixturePrior, n_grid: Sequence[int], trials: int,
               seed: int, sigma: float = 1.0, grid_m: Optional[int] = None,
               em: EMConfig = EMConfig()) -> list[dict]:
    """Paired-trial regret of the fitted rule against the true-prior rule,
    with the normalized statistic regret * n / log(n) per sample size.

    The oracle Bayes risk column comes from quadrature, independent of the
    Monte Carlo path.
    """
    if list(n_grid) != sorted(n_grid) or len(n_grid) < 1:
        raise InvalidInputError("n_grid must be increasing and nonempty")
    oracle_risk = prior.bayes_risk(sigma)
    oracle_rule = prior.rule(sigma)
    table = []
    for idx, n in enumerate(n_grid):
        spec = ScenarioSpec(kind="iid-prior", n=int(n), sigma=sigma, prior=prior)
        diffs = np.empty(trials)
        fitted_losses = np.empty(trials)
        oracle_losses = np.empty(trials)
        for t in range(trials):
            theta, s = generate_scenario(spec, np.random.SeedSequence(
                seed, spawn_key=(idx, t)))
            fit = fit_npmle(s, default_grid(s, grid_m), em)
            est_hat = tweedie_rule(fit.g_hat, s.sigma).delta(s.y)
            est_orc = oracle_rule.delta(s.y)
            fitted_losses[t] = np.mean((est_hat - theta) ** 2)
            oracle_losses[t] = np.mean((est_orc - theta) ** 2)
            diffs[t] = fitted_losses[t] - oracle_losses[t]
        regret = float(diffs.mean())
        se = float(diffs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        table.append({
            "n": int(n),
            "trials": trials,
            "regret": regret,
            "regret_se": se,
            "regret_normalized": regret * n / math.log(n),
            "mean_loss_npmle": float(fitted_losses.mean()),
            "mean_loss_oracle": float(oracle_losses.mean()),
            "oracle_risk_quadrature": oracle_risk,
        })
    return table
