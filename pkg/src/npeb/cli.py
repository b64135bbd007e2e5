"""Command-line interface.

Subcommands: ``fit`` (NPMLE of the mixing distribution), ``denoise``
(posterior-mean estimates per observation), ``simulate`` (risk comparison
experiment), ``figure1`` (canned scatter + efficiency-curve experiment),
``rate`` (regret rate table).

All randomness is controlled by an explicit seed; malformed inputs exit
nonzero with a single JSON error line on stderr.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .harness import ExperimentConfig, rate_check, run_experiment
from .mixture import InvalidInputError, MixingDistribution, Sample, tweedie_rule
from .npmle import EMConfig, GridSpec, default_grid, fit_npmle
from .scenarios import GaussianMixturePrior, ScenarioSpec

FIGURE1_PRIOR = {"weights": [0.8, 0.2], "means": [0.0, 3.0], "sds": [3.0, 3.0]}


def _fail(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


def _read_y_csv(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["y"]:
                raise InvalidInputError(
                    f"{path}: expected single-column CSV with header 'y', "
                    f"got header {header!r}")
            values = []
            for i, row in enumerate(reader, start=2):
                if len(row) != 1:
                    raise InvalidInputError(f"{path}: row {i}: expected 1 field, got {len(row)}")
                try:
                    values.append(float(row[0]))
                except ValueError:
                    raise InvalidInputError(
                        f"{path}: row {i}: field 'y' is not a number: {row[0]!r}")
    except OSError as e:
        raise InvalidInputError(str(e)) from e
    if not values:
        raise InvalidInputError(f"{path}: no observations")
    return np.array(values)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


def _fit_to_json(fit) -> str:
    payload = {
        "atoms": fit.g_hat.atoms.tolist(),
        "weights": fit.g_hat.weights.tolist(),
        "loglik": fit.loglik,
        "optimality_gap": fit.optimality_gap,
        "iterations_used": fit.iterations_used,
        "grid": {"lo": fit.grid.lo, "hi": fit.grid.hi, "m": fit.grid.m,
                 "capped": fit.grid_capped},
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


@click.group()
def main():
    """Empirical-Bayes denoising of normal means and risk experiments."""


@main.command("fit")
@click.option("--input", "input_path", required=True, help="CSV with header 'y'.")
@click.option("--sigma", type=float, required=True)
@click.option("--grid-m", type=int, default=None)
@click.option("--out", "out_path", default=None, help="Output JSON (stdout if omitted).")
@click.option("--max-iters", type=int, default=5000)
@click.option("--rel-tol", type=float, default=1e-9)
def fit_cmd(input_path, sigma, grid_m, out_path, max_iters, rel_tol):
    """Fit the NPMLE mixing distribution to the observations."""
    try:
        y = _read_y_csv(input_path)
        s = Sample(y, sigma)
        fit = fit_npmle(s, default_grid(s, grid_m),
                        EMConfig(max_iters=max_iters, rel_tol=rel_tol))
        _write_text(out_path, _fit_to_json(fit))
    except (InvalidInputError, ValueError) as e:
        _fail(str(e))


@main.command("denoise")
@click.option("--input", "input_path", required=True, help="CSV with header 'y'.")
@click.option("--sigma", type=float, required=True)
@click.option("--fit", "fit_path", default=None,
              help="fit.json from the fit subcommand; fits afresh if omitted.")
@click.option("--out", "out_path", default=None, help="Output CSV (stdout if omitted).")
@click.option("--grid-m", type=int, default=None)
def denoise_cmd(input_path, sigma, fit_path, out_path, grid_m):
    """Posterior-mean estimate for each observation."""
    try:
        y = _read_y_csv(input_path)
        s = Sample(y, sigma)
        if fit_path is not None:
            try:
                d = json.loads(Path(fit_path).read_text())
                g = MixingDistribution(np.array(d["atoms"]), np.array(d["weights"]))
            except (OSError, KeyError, json.JSONDecodeError) as e:
                raise InvalidInputError(f"{fit_path}: invalid fit file: {e}")
        else:
            g = fit_npmle(s, default_grid(s, grid_m)).g_hat
        est = tweedie_rule(g, sigma).delta(s.y)
        lines = ["y,theta_hat"] + [f"{float(yi)!r},{float(ti)!r}"
                                   for yi, ti in zip(s.y, est)]
        _write_text(out_path, "\n".join(lines) + "\n")
    except (InvalidInputError, ValueError) as e:
        _fail(str(e))


@main.command("simulate")
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--losses", "losses_path", default=None,
              help="Optional per-trial losses CSV (trial,estimator,loss).")
@click.option("--seed", type=int, default=0,
              help="Base seed when the config omits one.")
@click.option("--workers", type=int, default=1)
def simulate_cmd(config_path, out_path, losses_path, seed, workers):
    """Run a risk-comparison experiment from a JSON config."""
    try:
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"{config_path}: {e}")
        raw.setdefault("seed", seed)
        try:
            cfg = ExperimentConfig.from_dict(raw)
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"{config_path}: missing/invalid field: {e}")
        report = run_experiment(cfg, workers=workers)
        Path(out_path).write_text(report.to_json())
        if losses_path is not None:
            lines = ["trial,estimator,loss"]
            for name in sorted(report.losses):
                for t, loss in enumerate(report.losses[name]):
                    lines.append(f"{t},{name},{loss!r}")
            Path(losses_path).write_text("\n".join(lines) + "\n")
        click.echo(f"wall_time_s={report.wall_time_s:.3f}", err=True)
    except (InvalidInputError, ValueError) as e:
        _fail(str(e))


@main.command("figure1")
@click.option("--out", "out_dir", required=True, help="Output directory for the CSVs.")
@click.option("--seed", type=int, default=0)
@click.option("--samples", type=int, default=1000,
              help="Trials for the n=100 scatter (panel a).")
@click.option("--trials", type=int, default=1000,
              help="Monte Carlo trials per point of the efficiency curve (panel b).")
@click.option("--perms", type=int, default=1_000_000,
              help="Permutation budget per trial.")
@click.option("--n", "n_scatter", type=int, default=100)
@click.option("--n-grid", default="10,30,100,300",
              help="Comma-separated sample sizes for panel (b).")
def figure1_cmd(out_dir, seed, samples, trials, perms, n_scatter, n_grid):
    """Scatter of per-sample losses (simple vs permutation-invariant) and
    the efficiency-vs-n curve, under the 0.8 N(0,9) + 0.2 N(3,9) prior."""
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        scenario = {"kind": "iid-prior", "prior": FIGURE1_PRIOR, "sigma": 1.0}

        cfg_a = ExperimentConfig.from_dict({
            "scenario": {**scenario, "n": n_scatter},
            "estimators": ["simple", "perm-mc"],
            "trials": samples, "seed": seed, "perm": {"num_perms": perms},
        })
        rep = run_experiment(cfg_a)
        lines = ["trial,loss_simple,loss_perm"]
        for t in range(samples):
            lines.append(f"{t},{rep.losses['simple'][t]!r},{rep.losses['perm-mc'][t]!r}")
        (out / "figure1a.csv").write_text("\n".join(lines) + "\n")

        header = ("n,trials,num_perms,mean_loss_simple,se_simple,"
                  "mean_loss_perm,se_perm,efficiency_ratio_of_means,"
                  "efficiency_mean_of_ratios")
        rows = [header]
        for part in n_grid.split(","):
            n = int(part)
            cfg_b = ExperimentConfig.from_dict({
                "scenario": {**scenario, "n": n},
                "estimators": ["simple", "perm-mc"],
                "trials": trials, "seed": seed + n, "perm": {"num_perms": perms},
            })
            r = run_experiment(cfg_b)
            ls = np.array(r.losses["simple"])
            lp = np.array(r.losses["perm-mc"])
            rows.append(",".join([
                str(n), str(trials), str(perms),
                repr(r.mean_loss["simple"]), repr(r.std_error["simple"]),
                repr(r.mean_loss["perm-mc"]), repr(r.std_error["perm-mc"]),
                repr(float(ls.mean() / lp.mean())),
                repr(float(np.mean(ls / lp))),
            ]))
        (out / "figure1b.csv").write_text("\n".join(rows) + "\n")
    except (InvalidInputError, ValueError) as e:
        _fail(str(e))


@main.command("rate")
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--seed", type=int, default=0)
def rate_cmd(config_path, out_path, seed):
    """Regret-rate table for the fitted rule vs the true-prior rule."""
    try:
        try:
            raw = json.loads(Path(config_path).read_text())
            prior = GaussianMixturePrior.from_dict(raw["prior"])
            n_grid = [int(v) for v in raw["n_grid"]]
            trials = int(raw["trials"])
        except (OSError, KeyError, json.JSONDecodeError, TypeError) as e:
            raise InvalidInputError(f"{config_path}: missing/invalid field: {e}")
        npmle = raw.get("npmle", {})
        em = EMConfig(max_iters=npmle.get("max_iters", 5000),
                      rel_tol=npmle.get("rel_tol", 1e-9),
                      prune_eps=npmle.get("prune_eps", 1e-10))
        table = rate_check(prior, n_grid, trials, raw.get("seed", seed),
                           sigma=float(raw.get("sigma", 1.0)),
                           grid_m=npmle.get("grid_m"), em=em)
        cols = list(table[0].keys())
        lines = [",".join(cols)]
        for row in table:
            lines.append(",".join(repr(row[c]) if isinstance(row[c], float)
                                  else str(row[c]) for c in cols))
        Path(out_path).write_text("\n".join(lines) + "\n")
    except (InvalidInputError, ValueError) as e:
        _fail(str(e))


if __name__ == "__main__":
    main()
