"""Command-line entry point.

Subcommands: mobility, simulate, fit, estimate, bias (diagnostic tables),
experiment. Every run writes exactly one manifest.json into its output
directory recording the echoed configuration, seeds, paths, version, wall
clock, and failure counts, so any run is reproducible from the manifest
alone. Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .basis import fit_basis
from .bias import (
    LinearBiasSetting,
    TauMoments,
    curve_gap_table,
    measurement_error_bias,
    measurement_error_xi,
    naive_slope,
    scalar_misspec_bias,
    scalar_misspec_table,
    true_effect,
    unbiasedness_factor,
    weighted_slope_star,
    xi_table,
)
from .distributions import parse_dist
from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    InvariantViolation,
    MissingOutcome,
    NumericalFailure,
    ParseError,
    ZeroRowSum,
)
from .estimands import (
    Intervention,
    exposure_response_curve,
    lambda_effect,
    marginal_phi,
    marginal_psi,
    mean_potential_outcome,
    omega_effect,
)
from .experiments import SCENARIO_SIGMA_ZETA, figure_tables, make_scenario, run_scenario
from .mobility import (
    compute_weights,
    load_mobility_csv,
    load_panel_csv,
    make_panel,
    save_panel_csv,
)
from .model import PosteriorDraws, FitConfig, fit, fit_naive
from .simulate import SimConfig, generate, truth_sidecar

_VALIDATION_ERRORS = (
    ParseError,
    InvariantViolation,
    ZeroRowSum,
    DimensionMismatch,
    MissingOutcome,
    DegenerateDenominator,
    ValueError,
    FileNotFoundError,
)


def _run(subcommand: str, out_dir: str, params: dict, inputs: list, body) -> None:
    """Execute a command body, then write the manifest and set the exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": 1,
        "subcommand": subcommand,
        "config": params,
        "inputs": [str(p) for p in inputs],
        "outputs": [],
        "version": __version__,
        "status": "ok",
        "error": None,
        "failure_counts": 0,
        "wall_clock_s": None,
    }
    start = time.perf_counter()
    code = 0
    try:
        outputs = body(out) or []
        manifest["outputs"] = [str(p) for p in outputs]
    except NumericalFailure as exc:
        manifest["status"] = "numerical-failure"
        manifest["error"] = str(exc)
        manifest["failure_counts"] = 1
        code = 2
    except _VALIDATION_ERRORS as exc:
        manifest["status"] = "validation-error"
        manifest["error"] = str(exc)
        code = 1
    finally:
        manifest["wall_clock_s"] = round(time.perf_counter() - start, 6)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    if manifest["error"]:
        click.echo(f"error: {manifest['error']}", err=True)
    sys.exit(code)


def _parse_vector(text: str, q: int, name: str) -> np.ndarray:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        return np.full(q, parts[0])
    if len(parts) != q:
        raise ParseError(f"{name} needs 1 or {q} comma-separated values")
    return np.asarray(parts)


@click.group()
@click.version_option(__version__)
def main():
    """Mobility-aware exposure-response estimation toolkit."""


@main.command()
@click.option("--mobility-csv", required=True, type=click.Path(exists=True))
@click.option("--exposures-csv", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", show_default=True)
def mobility(mobility_csv, exposures_csv, out_dir):
    """Turn a region-to-region time matrix into weights and a panel."""

    def body(out: Path):
        t = load_mobility_csv(mobility_csv)
        try:
            w = np.loadtxt(exposures_csv, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ParseError(f"could not parse exposures CSV: {exc}") from exc
        weights = compute_weights(t)
        panel = make_panel(weights, w)
        panel_path = out / "panel.csv"
        alpha_path = out / "alpha.csv"
        save_panel_csv(panel, panel_path)
        np.savetxt(alpha_path, np.asarray(weights.alpha), delimiter=",")
        return [panel_path, alpha_path]

    _run(
        "mobility",
        out_dir,
        {"mobility_csv": mobility_csv, "exposures_csv": exposures_csv},
        [mobility_csv, exposures_csv],
        body,
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def simulate(config_path, out_dir, seed):
    """Generate a synthetic panel plus its generative truth sidecar."""

    def body(out: Path):
        cfg = SimConfig.from_json(Path(config_path).read_text())
        if seed is not None:
            cfg = SimConfig.from_json(
                json.dumps({**json.loads(cfg.to_json()), "seed": seed})
            )
        panel, truth = generate(cfg)
        panel_path = out / "panel.csv"
        truth_path = out / "truth.json"
        alpha_path = out / "alpha.csv"
        save_panel_csv(panel, panel_path)
        truth_path.write_text(truth_sidecar(cfg, truth).to_json())
        nz = np.argwhere(truth.alpha != 0)
        rows = np.column_stack([nz, truth.alpha[nz[:, 0], nz[:, 1]]])
        np.savetxt(alpha_path, rows, delimiter=",", header="i,j,alpha", comments="")
        return [panel_path, truth_path, alpha_path]

    _run("simulate", out_dir, {"config": config_path, "seed": seed}, [config_path], body)


@main.command(name="fit")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option("--draws", default=2000, show_default=True)
@click.option("--burnin", default=500, show_default=True)
@click.option("--chains", default=2, show_default=True)
@click.option("--thin", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--degree", default=3, show_default=True)
@click.option(
    "--shrinkage/--no-shrinkage",
    "use_shrinkage",
    default=True,
    show_default=True,
    help="Horseshoe prior on the coefficient gap vs the Gaussian variant.",
)
@click.option("--naive", is_flag=True, help="Ignore mobility: regress on home exposures only.")
@click.option("--csv", "export_csv", is_flag=True, help="Also export draws as CSV.")
def fit_cmd(data_path, out_dir, draws, burnin, chains, thin, seed, degree, use_shrinkage, naive, export_csv):
    """Fit the exposure model by Gibbs sampling and store the posterior."""

    def body(out: Path):
        panel = load_panel_csv(data_path)
        spec = fit_basis(np.vstack([panel.w, panel.g]), degree=degree, normalize="sd")
        cfg = FitConfig(
            n_draws=draws, n_burnin=burnin, n_chains=chains, thin=thin, seed=seed
        )
        if naive:
            post = fit_naive(panel, spec, cfg)
        else:
            post = fit(panel, spec, cfg, shrinkage=use_shrinkage)
        post_path = out / "posterior.bin"
        post.save(post_path)
        outputs = [post_path]
        if export_csv:
            csv_path = out / "posterior.csv"
            post.to_csv(csv_path)
            outputs.append(csv_path)
        return outputs

    _run(
        "fit",
        out_dir,
        {
            "data": data_path,
            "draws": draws,
            "burnin": burnin,
            "chains": chains,
            "thin": thin,
            "seed": seed,
            "degree": degree,
            "shrinkage": use_shrinkage,
            "naive": naive,
        },
        [data_path],
        body,
    )


@main.command()
@click.option("--posterior", "post_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option(
    "--estimand",
    type=click.Choice(["omega", "mu", "phi", "psi", "lambda"]),
    default="omega",
    show_default=True,
)
@click.option("--delta", default="0.5", show_default=True, help="Uniform shift (scalar or comma list).")
@click.option("--w", "w_text", default=None, help="Home exposure point (comma list).")
@click.option("--g", "g_text", default=None, help="Neighborhood exposure point (comma list).")
@click.option("--delta-g", "delta_g_text", default=None, help="Neighborhood shift for lambda.")
@click.option("--grid", default=None, help="lo:hi:num grid for a phi response curve.")
@click.option("--exposure-index", default=0, show_default=True)
@click.option("--weight-seed", type=int, default=None)
def estimate(post_path, data_path, out_dir, estimand, delta, w_text, g_text, delta_g_text, grid,
             exposure_index, weight_seed):
    """Compute posterior estimands from a stored fit."""

    def body(out: Path):
        post = PosteriorDraws.load(post_path)
        panel = load_panel_csv(data_path)
        q = panel.q
        outputs = []
        results = []
        if grid is not None and estimand == "phi":
            try:
                lo, hi, num = grid.split(":")
                values = np.linspace(float(lo), float(hi), int(num))
            except ValueError as exc:
                raise ParseError(f"bad grid spec {grid!r}, want lo:hi:num") from exc
            curve = exposure_response_curve(
                post, panel, exposure_index, values, weight_seed=weight_seed
            )
            curve_path = out / "curve.csv"
            curve.to_csv(curve_path, index=False)
            outputs.append(curve_path)
        elif estimand == "omega":
            eff = omega_effect(post, Intervention(_parse_vector(delta, q, "delta")), panel)
            results = [eff.total] + [r for r in (eff.direct, eff.spillover) if r is not None]
        elif estimand == "mu":
            w_point = _parse_vector(w_text or "0", q, "w")
            g_point = _parse_vector(g_text or "0", q, "g")
            results = [mean_potential_outcome(post, w_point, g_point, panel, weight_seed=weight_seed)]
        elif estimand == "phi":
            results = [marginal_phi(post, _parse_vector(w_text or "0", q, "w"), panel,
                                    weight_seed=weight_seed)]
        elif estimand == "psi":
            results = [marginal_psi(post, _parse_vector(g_text or "0", q, "g"), panel,
                                    weight_seed=weight_seed)]
        else:  # lambda
            eff = lambda_effect(
                post,
                _parse_vector(w_text or "0", q, "w"),
                _parse_vector(g_text or "0", q, "g"),
                _parse_vector(delta, q, "delta_w"),
                _parse_vector(delta_g_text if delta_g_text is not None else delta, q, "delta_g"),
                panel,
                weight_seed=weight_seed,
            )
            results = [eff.total, eff.direct, eff.spillover]
        if results:
            est_path = out / "estimates.json"
            est_path.write_text(json.dumps([r.to_dict() for r in results], indent=2))
            outputs.append(est_path)
            for r in results:
                click.echo(
                    f"{r.label}: mean={r.mean:.6g} ci=[{r.ci_lower:.6g}, {r.ci_upper:.6g}]"
                )
        return outputs

    _run(
        "estimate",
        out_dir,
        {
            "posterior": post_path,
            "data": data_path,
            "estimand": estimand,
            "delta": delta,
            "w": w_text,
            "g": g_text,
            "delta_g": delta_g_text,
            "grid": grid,
            "exposure_index": exposure_index,
            "weight_seed": weight_seed,
        },
        [post_path, data_path],
        body,
    )


@main.group()
def bias():
    """Closed-form bias diagnostics and plot-ready tables."""


@bias.command()
@click.option("--tau-dist", required=True, help="True time-fraction law, e.g. uniform:0.25:0.75")
@click.option("--eta-dist", required=True, help="Mean-zero noise law, e.g. uniform:-0.25:0.25")
@click.option("--beta-w", default=1.0, show_default=True)
@click.option("--beta-g", default=1.0, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True)
def xi(tau_dist, eta_dist, beta_w, beta_g, out_dir):
    """Attenuation factors under noisy time fractions (prints xi_w, xi_g)."""

    def body(out: Path):
        moments = TauMoments.from_dist(parse_dist(tau_dist), parse_dist(eta_dist))
        factors = measurement_error_xi(moments)
        b = measurement_error_bias(moments, beta_w, beta_g)
        click.echo(f"xi_w = {factors.xi_w:.6f}")
        click.echo(f"xi_g = {factors.xi_g:.6f}")
        click.echo(f"bias = {b:.6f}")
        return []

    _run(
        "bias xi",
        out_dir,
        {"tau_dist": tau_dist, "eta_dist": eta_dist, "beta_w": beta_w, "beta_g": beta_g},
        [],
        body,
    )


@bias.command()
@click.option("--c", default=0.5, show_default=True)
@click.option("--rho", required=True, type=float)
@click.option("--tau-dist", required=True)
@click.option("--beta-g", default=1.0, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True)
def scalar(c, rho, tau_dist, beta_g, out_dir):
    """Bias under time fractions off by a constant factor."""

    def body(out: Path):
        moments = TauMoments.from_dist(parse_dist(tau_dist))
        click.echo(f"bias = {scalar_misspec_bias(c, rho, moments, beta_g):.6f}")
        return []

    _run("bias scalar", out_dir, {"c": c, "rho": rho, "tau_dist": tau_dist, "beta_g": beta_g}, [], body)


@bias.command()
@click.option("--tau", required=True, type=float)
@click.option("--rho", required=True, type=float)
@click.option("--beta-w", required=True, type=float)
@click.option("--beta-g", required=True, type=float)
@click.option("--out", "out_dir", default=".", show_default=True)
def slopes(tau, rho, beta_w, beta_g, out_dir):
    """Population slopes of the home-only and blended-exposure regressions."""

    def body(out: Path):
        s = LinearBiasSetting(tau=tau, rho=rho, beta_w=beta_w, beta_g=beta_g)
        click.echo(f"true_effect = {true_effect(s):.6f}")
        click.echo(f"naive_slope = {naive_slope(s):.6f}")
        click.echo(f"weighted_slope_star = {weighted_slope_star(s):.6f}")
        click.echo(f"unbiasedness_factor = {unbiasedness_factor(s):.6g}")
        return []

    _run("bias slopes", out_dir, {"tau": tau, "rho": rho, "beta_w": beta_w, "beta_g": beta_g}, [], body)


@bias.command(name="curve-gap")
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option("--draws", default=100_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def curve_gap(out_dir, draws, seed):
    """Marginal vs neighborhood-ignoring curves by corr(W, G), as CSV."""

    def body(out: Path):
        path = out / "curve_gap.csv"
        curve_gap_table(mc_draws=draws, seed=seed).to_csv(path, index=False)
        return [path]

    _run("bias curve-gap", out_dir, {"draws": draws, "seed": seed}, [], body)


@bias.command(name="misspec-by-rho")
@click.option("--c", default=0.5, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True)
def misspec_by_rho(c, out_dir):
    """Scalar-misspecification bias against rho by tau law, as CSV."""

    def body(out: Path):
        path = out / "misspec_bias.csv"
        scalar_misspec_table(c=c).to_csv(path, index=False)
        return [path]

    _run("bias misspec-by-rho", out_dir, {"c": c}, [], body)


@bias.command(name="xi-by-noise")
@click.option("--out", "out_dir", default=".", show_default=True)
def xi_by_noise(out_dir):
    """Attenuation factors and bias against the noise second moment, as CSV."""

    def body(out: Path):
        path = out / "xi_curves.csv"
        xi_table().to_csv(path, index=False)
        return [path]

    _run("bias xi-by-noise", out_dir, {}, [], body)


@main.command()
@click.option(
    "--scenario",
    "scenario_name",
    default="all",
    show_default=True,
    type=click.Choice(sorted(SCENARIO_SIGMA_ZETA) + ["all"]),
)
@click.option("--n", default=300, show_default=True)
@click.option("--reps", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option("--threads", default=1, show_default=True)
@click.option("--draws", default=2000, show_default=True)
@click.option("--burnin", default=500, show_default=True)
def experiment(scenario_name, n, reps, seed, out_dir, threads, draws, burnin):
    """Run the estimator-comparison study and emit result JSON + figure CSV."""

    def body(out: Path):
        names = sorted(SCENARIO_SIGMA_ZETA) if scenario_name == "all" else [scenario_name]
        outputs = []
        results = []
        for name in names:
            sc = make_scenario(name, n=n, n_reps=reps, n_draws=draws, n_burnin=burnin)
            res = run_scenario(sc, seed=seed, workers=threads)
            results.append(res)
            path = out / f"{name}.json"
            path.write_text(res.to_json())
            outputs.append(path)
            click.echo(f"{name}: relative MSE {res.relative_mse()} coverage {res.coverage()}")
        fig_path = out / "figure.csv"
        figure_tables(results).to_csv(fig_path, index=False)
        outputs.append(fig_path)
        return outputs

    _run(
        "experiment",
        out_dir,
        {
            "scenario": scenario_name,
            "n": n,
            "reps": reps,
            "seed": seed,
            "threads": threads,
            "draws": draws,
            "burnin": burnin,
        },
        [],
        body,
    )


if __name__ == "__main__":
    main()
