"""Simulation-study harness comparing the four estimators.

Each replicate generates a synthetic dataset, computes the exact
sample-average shift effect from the generative truth, fits the requested
estimators, and records their posterior-mean estimates with 95% intervals.
Scenario-level metrics are the MSE of the estimate against the truth
(reported relative to the scenario minimum) and the empirical interval
coverage of the total effect; direct/spillover decompositions are kept as
supplementary records for the mobility-aware estimators.

Estimators:
  shrinkage       tau-weighted model, horseshoe prior on the coefficient gap
  non-shrinkage   same model, Gaussian/inverse-gamma prior on the gap
  misspecified    shrinkage model fitted and evaluated with tau scaled by a
                  constant factor (default 0.75) while data use the true tau
  no-mobility     regression on home exposures only

Replicates own independent seed streams, so results are invariant to
execution order and to the degree of parallelism.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd

from .basis import fit_basis
from .errors import NumericalFailure
from .estimands import Intervention, omega_effect
from .mobility import ExposurePanel
from .model import FitConfig, fit, fit_naive
from .rngs import replicate_seeds
from .simulate import SimConfig, generate, true_omega

SCENARIO_SIGMA_ZETA = {
    "no-difference": 0.0,
    "small-difference": 0.15,
    "moderate-difference": 0.3,
}
ALL_ESTIMATORS = ("shrinkage", "non-shrinkage", "misspecified", "no-mobility")
MOBILITY_AWARE = ("shrinkage", "non-shrinkage", "misspecified")


@dataclass(frozen=True)
class Scenario:
    name: str
    sigma_zeta: float
    n_reps: int = 100
    estimators: tuple[str, ...] = ALL_ESTIMATORS
    misspec_factor: float = 0.75
    delta: float = 0.5
    sim: SimConfig = field(default_factory=lambda: SimConfig(n=300))
    fit: FitConfig = field(default_factory=lambda: FitConfig(n_draws=2000, n_burnin=500, n_chains=1))

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        unknown = set(self.estimators) - set(ALL_ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")


def make_scenario(
    name: str,
    n: int = 300,
    n_reps: int = 100,
    n_draws: int = 2000,
    n_burnin: int = 500,
    n_chains: int = 1,
    estimators: tuple[str, ...] = ALL_ESTIMATORS,
    misspec_factor: float = 0.75,
    delta: float = 0.5,
) -> Scenario:
    """Desk-scale scenario preset keyed by difference level."""
    if name not in SCENARIO_SIGMA_ZETA:
        raise ValueError(f"unknown scenario {name!r}; pick from {sorted(SCENARIO_SIGMA_ZETA)}")
    return Scenario(
        name=name,
        sigma_zeta=SCENARIO_SIGMA_ZETA[name],
        n_reps=n_reps,
        estimators=estimators,
        misspec_factor=misspec_factor,
        delta=delta,
        sim=SimConfig(n=n),
        fit=FitConfig(n_draws=n_draws, n_burnin=n_burnin, n_chains=n_chains),
    )


@dataclass
class ReplicateRecord:
    """Per-replicate truth and per-estimator results."""

    rep: int
    truth_total: float
    truth_direct: float
    truth_spillover: float
    estimates: dict  # estimator -> {"mean", "lower", "upper", optional dir/sp}
    failed: bool = False
    error: str = ""


def run_replicate(scenario: Scenario, rep: int, rep_seed: int) -> ReplicateRecord:
    """Generate one dataset, compute the truth, fit every estimator."""
    sim_cfg = replace(scenario.sim, sigma_zeta=scenario.sigma_zeta, seed=rep_seed)
    panel, truth = generate(sim_cfg)
    delta_vec = np.full(sim_cfg.q, scenario.delta)
    truth_omega = true_omega(truth, delta_vec)
    intervention = Intervention(delta_w=delta_vec, mode="uniform")

    spec = fit_basis(np.vstack([panel.w, panel.g]), degree=sim_cfg.degree, normalize="sd")
    fit_cfg = replace(scenario.fit, seed=rep_seed)
    estimates: dict[str, dict] = {}
    try:
        for estimator in scenario.estimators:
            if estimator == "no-mobility":
                post = fit_naive(panel, spec, fit_cfg)
                eff = omega_effect(post, intervention, panel)
            elif estimator == "misspecified":
                wrong = ExposurePanel(
                    w=panel.w,
                    g=panel.g,
                    tau=scenario.misspec_factor * panel.tau,
                    x=panel.x,
                    y=panel.y,
                )
                post = fit(wrong, spec, fit_cfg, shrinkage=True)
                eff = omega_effect(post, intervention, wrong)
            else:
                post = fit(panel, spec, fit_cfg, shrinkage=(estimator == "shrinkage"))
                eff = omega_effect(post, intervention, panel)
            record = {
                "mean": eff.total.mean,
                "lower": eff.total.ci_lower,
                "upper": eff.total.ci_upper,
            }
            if eff.direct is not None:
                record["direct"] = eff.direct.mean
                record["spillover"] = eff.spillover.mean
            estimates[estimator] = record
    except NumericalFailure as exc:
        return ReplicateRecord(
            rep=rep,
            truth_total=truth_omega.total,
            truth_direct=truth_omega.direct,
            truth_spillover=truth_omega.spillover,
            estimates={},
            failed=True,
            error=str(exc),
        )
    return ReplicateRecord(
        rep=rep,
        truth_total=truth_omega.total,
        truth_direct=truth_omega.direct,
        truth_spillover=truth_omega.spillover,
        estimates=estimates,
    )


@dataclass
class ScenarioResult:
    scenario_name: str
    sigma_zeta: float
    estimators: tuple[str, ...]
    records: list[ReplicateRecord]
    n_failed: int
    failed_reps: list[int]

    def _ok(self) -> list[ReplicateRecord]:
        return [r for r in self.records if not r.failed]

    def truths(self) -> np.ndarray:
        return np.array([r.truth_total for r in self._ok()])

    def estimates(self, estimator: str) -> np.ndarray:
        return np.array([r.estimates[estimator]["mean"] for r in self._ok()])

    def intervals(self, estimator: str) -> tuple[np.ndarray, np.ndarray]:
        ok = self._ok()
        lo = np.array([r.estimates[estimator]["lower"] for r in ok])
        hi = np.array([r.estimates[estimator]["upper"] for r in ok])
        return lo, hi

    def mse(self) -> dict[str, float]:
        truths = self.truths()
        return {
            est: float(np.mean((self.estimates(est) - truths) ** 2))
            for est in self.estimators
        }

    def relative_mse(self) -> dict[str, float]:
        mse = self.mse()
        floor = min(mse.values())
        if floor == 0.0:
            return {est: 1.0 if value == 0.0 else float("inf") for est, value in mse.items()}
        return {est: value / floor for est, value in mse.items()}

    def coverage(self) -> dict[str, float]:
        truths = self.truths()
        out = {}
        for est in self.estimators:
            lo, hi = self.intervals(est)
            out[est] = float(np.mean((lo <= truths) & (truths <= hi)))
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "scenario": self.scenario_name,
            "sigma_zeta": self.sigma_zeta,
            "estimators": list(self.estimators),
            "n_failed": self.n_failed,
            "failed_reps": self.failed_reps,
            "mse": self.mse(),
            "relative_mse": self.relative_mse(),
            "coverage": self.coverage(),
            "records": [
                {
                    "rep": r.rep,
                    "truth_total": r.truth_total,
                    "truth_direct": r.truth_direct,
                    "truth_spillover": r.truth_spillover,
                    "estimates": r.estimates,
                    "failed": r.failed,
                    "error": r.error,
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_scenario(scenario: Scenario, seed: int, workers: int = 1) -> ScenarioResult:
    """Run every replicate on its own seed stream, serially or in a pool."""
    seeds = [
        int(seq.generate_state(1, np.uint64)[0])
        for seq in replicate_seeds(seed, f"experiment/{scenario.name}", scenario.n_reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(run_replicate, [scenario] * scenario.n_reps, range(scenario.n_reps), seeds)
            )
    else:
        records = [run_replicate(scenario, rep, s) for rep, s in enumerate(seeds)]
    failed = [r.rep for r in records if r.failed]
    return ScenarioResult(
        scenario_name=scenario.name,
        sigma_zeta=scenario.sigma_zeta,
        estimators=scenario.estimators,
        records=records,
        n_failed=len(failed),
        failed_reps=failed,
    )


def figure_tables(results, cap: float = 5.0) -> pd.DataFrame:
    """Long-format metric rows for plotting.

    One MSE row and one coverage row per (scenario, estimator). The display
    column caps relative MSE at `cap`; the raw value is retained.
    """
    if isinstance(results, ScenarioResult):
        results = [results]
    rows = []
    for res in results:
        rel = res.relative_mse()
        cov = res.coverage()
        for est in res.estimators:
            rows.append(
                {
                    "scenario": res.scenario_name,
                    "estimator": est,
                    "metric": "relative_mse",
                    "value": rel[est],
                    "display_value": min(rel[est], cap),
                }
            )
            rows.append(
                {
                    "scenario": res.scenario_name,
                    "estimator": est,
                    "metric": "coverage",
                    "value": cov[est],
                    "display_value": cov[est],
                }
            )
    return pd.DataFrame(rows)
