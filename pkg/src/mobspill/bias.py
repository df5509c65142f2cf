"""Closed-form bias diagnostics and their Monte-Carlo oracles.

Setting: univariate home exposure W and neighborhood exposure G, both unit
variance with correlation rho, outcome mean tau*W*beta_w + (1-tau)*G*beta_g.
The functions here quantify what various wrong analyses converge to:

* ``naive_slope`` -- population slope of Y on W alone.
* ``weighted_slope_star`` -- population slope of Y on the blended exposure
  W* = tau W + (1-tau) G, with ``unbiasedness_factor`` the exact factorization
  of its gap from the true effect.
* ``scalar_misspec_bias`` -- asymptotic bias of the sample-average shift
  effect when the analyst's time fractions are the true ones divided by a
  constant c.
* ``measurement_error_xi`` -- attenuation factors when the analyst's time
  fractions carry additive noise (rho = 0 case), plus the resulting bias.
* ``additive_error_check`` -- the opposite noise direction (true = assumed +
  noise), which is exactly unbiased; the evaluator reproduces the zero.
* ``naive_curve_gap`` / ``lambda_naive_gap`` -- Monte-Carlo evaluation of the
  marginal-curve and shift-effect gaps for general nonlinear outcome models,
  with the conditional neighborhood distribution approximated by k-nearest
  neighbours.

Every closed form has a brute-force oracle (``mc_ols_omega``,
``mc_naive_slope``, ``mc_star_slope``) that simulates data and runs the
corresponding least-squares analysis.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from .distributions import Dist
from .errors import DegenerateDenominator, InsufficientDraws


# ---------------------------------------------------------------------------
# linear one-regressor / blended-regressor slopes


@dataclass(frozen=True)
class LinearBiasSetting:
    """Constant time fraction tau, corr(W, G) = rho, and the two effects."""

    tau: float
    rho: float
    beta_w: float
    beta_g: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")


def true_effect(s: LinearBiasSetting) -> float:
    """Effect of raising both exposures by one unit."""
    return s.tau * s.beta_w + (1.0 - s.tau) * s.beta_g


def naive_slope(s: LinearBiasSetting) -> float:
    """Population slope of Y on W alone."""
    return s.tau * s.beta_w + s.rho * (1.0 - s.tau) * s.beta_g


def weighted_slope_star(s: LinearBiasSetting) -> float:
    """Population slope of Y on the blended exposure tau W + (1-tau) G."""
    t, r = s.tau, s.rho
    den = t * t + 2.0 * t * (1.0 - t) * r + (1.0 - t) ** 2
    if den == 0.0:
        raise DegenerateDenominator("blended exposure is degenerate (tau=0.5, rho=-1)")
    num = (
        t * t * s.beta_w
        + r * t * (1.0 - t) * s.beta_w
        + r * t * (1.0 - t) * s.beta_g
        + (1.0 - t) ** 2 * s.beta_g
    )
    return num / den


def unbiasedness_factor(s: LinearBiasSetting) -> float:
    """Factorized gap: (weighted_slope_star - true effect) times its
    denominator. Zero exactly when tau is 0, 1/2, or 1, rho is 1, or the two
    effects coincide."""
    t = s.tau
    return t * (t - 1.0) * (2.0 * t - 1.0) * (s.beta_w - s.beta_g) * (s.rho - 1.0)


# ---------------------------------------------------------------------------
# time-fraction moments and the misspecified-weights formulas


@dataclass(frozen=True)
class TauMoments:
    """First and second raw moments of the analyst's time fraction; the
    starred fields describe the true fraction and the noise second moment for
    the measurement-error formulas."""

    mean: float
    mean_sq: float
    star_mean: float | None = None
    star_mean_sq: float | None = None
    eta_sq: float | None = None

    def __post_init__(self):
        if self.mean_sq + 1e-12 < self.mean**2:
            raise ValueError("mean_sq must be at least mean^2")
        if self.eta_sq is not None and self.eta_sq < 0:
            raise ValueError("eta_sq must be nonnegative")

    @property
    def variance(self) -> float:
        return self.mean_sq - self.mean**2

    @classmethod
    def from_dist(cls, tau_dist: Dist, eta_dist: Dist | None = None) -> "TauMoments":
        """Exact moments from distribution specs; tau_dist doubles as the
        true-fraction law for the measurement-error case."""
        eta_sq = None
        if eta_dist is not None:
            if abs(eta_dist.mean) > 1e-12:
                raise ValueError("measurement error must have mean zero")
            eta_sq = eta_dist.raw_moment2
        return cls(
            mean=tau_dist.mean,
            mean_sq=tau_dist.raw_moment2,
            star_mean=tau_dist.mean,
            star_mean_sq=tau_dist.raw_moment2,
            eta_sq=eta_sq,
        )

    @classmethod
    def from_samples(cls, tau, tau_star=None, eta=None) -> "TauMoments":
        tau = np.asarray(tau, dtype=float)
        kw = {"mean": float(tau.mean()), "mean_sq": float((tau**2).mean())}
        if tau_star is not None:
            tau_star = np.asarray(tau_star, dtype=float)
            kw["star_mean"] = float(tau_star.mean())
            kw["star_mean_sq"] = float((tau_star**2).mean())
        if eta is not None:
            eta = np.asarray(eta, dtype=float)
            kw["eta_sq"] = float((eta**2).mean())
        return cls(**kw)


def scalar_misspec_bias(c: float, rho: float, moments: TauMoments, beta_g_star: float) -> float:
    """Asymptotic bias of the shift-effect estimate when the analyst's time
    fraction tau equals the true fraction divided by c.

    Moments are those of the analyst's tau. Zero when c = 1, rho = 1, or tau
    is constant. (The zero in rho sits at E(tau^2)/E[tau(1-tau)], which
    exceeds 1 for many tau laws; this is the form that matches the
    least-squares limit, see the Monte-Carlo oracle tests.)
    """
    m1, m2 = moments.mean, moments.mean_sq
    e11 = m1 - m2  # E tau(1-tau)
    e2 = ((1.0 - m1) - m1) + m2  # E (1-tau)^2
    den = e2 * m2 - rho * rho * (e11 * e11)
    if den == 0.0:
        raise DegenerateDenominator("moment matrix is singular for these parameters")
    var = m2 - m1 * m1
    bias = beta_g_star * (1.0 - c) * (1.0 - rho) * var * (rho * m1 - (1.0 + rho) * m2) / den
    return bias + 0.0  # normalize -0.0


def general_omega_bias(
    rho: float,
    m_t: float,
    m_t2: float,
    m_s: float,
    m_ts: float,
    beta_w_star: float,
    beta_g_star: float,
) -> float:
    """Asymptotic bias of the shift-effect estimate for arbitrary joint
    moments of the analyst's tau and the true tau*.

    Inputs: m_t = E(tau), m_t2 = E(tau^2), m_s = E(tau*), m_ts = E(tau tau*).
    This is the large-sample limit of the two-regressor least-squares analysis
    with exposures standardized, correlation rho, and tau independent of the
    exposures. Terms are grouped so that structurally equal moment products
    cancel exactly; in particular the true-equals-assumed-plus-noise case
    returns exactly 0.0.
    """
    e11 = m_t - m_t2  # E tau(1-tau)
    e2 = ((1.0 - m_t) - m_t) + m_t2  # E (1-tau)^2
    e_s1t = m_s - m_ts  # E tau*(1-tau)
    e_t1s = m_t - m_ts  # E tau(1-tau*)
    e_1t1s = ((1.0 - m_t) - m_s) + m_ts  # E (1-tau)(1-tau*)
    rho2 = rho * rho
    den = e2 * m_t2 - rho2 * (e11 * e11)
    if den == 0.0:
        raise DegenerateDenominator("moment matrix is singular for these parameters")
    n_ww = e2 * m_ts - rho2 * (e11 * e_s1t)
    n_gw = rho * (m_t2 * e_s1t) - rho * (e11 * m_ts)
    n_wg = rho * (e2 * e_t1s) - rho * (e11 * e_1t1s)
    n_gg = m_t2 * e_1t1s - rho2 * (e11 * e_t1s)
    bias_w = (n_ww / den) * m_t + (n_gw / den) * (1.0 - m_t) - m_s
    bias_g = (n_wg / den) * m_t + (n_gg / den) * (1.0 - m_t) - (1.0 - m_s)
    return beta_w_star * bias_w + beta_g_star * bias_g


class XiFactors(NamedTuple):
    xi_w: float
    xi_g: float


def measurement_error_xi(moments: TauMoments) -> XiFactors:
    """Attenuation factors when the analyst's tau is the true tau* plus
    mean-zero noise with second moment eta_sq, at rho = 0.

    The shared E[(1-tau*-eta)^2] factor cancels, leaving
    xi_w = E(tau*^2) / (E(tau*^2) + E(eta^2)) and the mirrored xi_g.
    Both are 1 at eta_sq = 0 and decay to 0 as the noise grows.
    """
    if moments.star_mean_sq is None or moments.eta_sq is None:
        raise ValueError("measurement_error_xi needs star moments and eta_sq")
    m2s = moments.star_mean_sq
    e2s = ((1.0 - moments.star_mean) - moments.star_mean) + m2s  # E (1-tau*)^2
    return XiFactors(xi_w=m2s / (m2s + moments.eta_sq), xi_g=e2s / (e2s + moments.eta_sq))


def measurement_error_bias(
    moments: TauMoments, beta_w_star: float, beta_g_star: float
) -> float:
    """Asymptotic bias under noisy time fractions at rho = 0:
    beta_w* (xi_w - 1) E(tau*) + beta_g* (xi_g - 1) E(1 - tau*).
    Conservative (toward zero) when the two effects share a sign."""
    xi = measurement_error_xi(moments)
    m_s = moments.star_mean
    return beta_w_star * (xi.xi_w * m_s - m_s) + beta_g_star * (
        xi.xi_g * (1.0 - m_s) - (1.0 - m_s)
    )


def additive_error_check(
    moments: TauMoments,
    rho: float = 0.0,
    beta_w_star: float = 1.0,
    beta_g_star: float = 1.0,
) -> float:
    """Bias when the TRUE fraction is the analyst's tau plus mean-zero noise.

    Substituting E(tau*) = E(tau) and E(tau tau*) = E(tau^2) into the general
    limit makes every term cancel; the grouping in general_omega_bias keeps
    the cancellation exact in floating point, so this returns 0.0.
    """
    return general_omega_bias(
        rho,
        m_t=moments.mean,
        m_t2=moments.mean_sq,
        m_s=moments.mean,
        m_ts=moments.mean_sq,
        beta_w_star=beta_w_star,
        beta_g_star=beta_g_star,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo oracles


class McEstimate(NamedTuple):
    value: float
    se: float
    reps: int


@dataclass(frozen=True)
class McOlsConfig:
    """Data-generating recipe for the two-regressor oracle.

    misspec:
      "none"           tau* = tau ~ tau_dist
      "scalar"         analyst tau ~ tau_dist, true tau* = c * tau
      "noisy-assumed"  true tau* ~ tau_dist, analyst tau = tau* + eta
      "noisy-true"     analyst tau ~ tau_dist, true tau* = tau + eta
    """

    rho: float
    beta_w: float
    beta_g: float
    tau_dist: Dist
    misspec: str = "none"
    c: float = 1.0
    eta_dist: Dist | None = None
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.misspec not in ("none", "scalar", "noisy-assumed", "noisy-true"):
            raise ValueError(f"unknown misspec kind {self.misspec!r}")
        if self.misspec.startswith("noisy") and self.eta_dist is None:
            raise ValueError("noisy misspecification needs eta_dist")


def _draw_wg(rng: np.random.Generator, rho: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    z = rng.standard_normal((n, 2))
    w = z[:, 0]
    g = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    return w, g


def _centered_eta(cfg: McOlsConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    eta = cfg.eta_dist.sample(rng, n)
    return eta - cfg.eta_dist.mean


def mc_ols_omega(cfg: McOlsConfig, n: int = 100_000, reps: int = 50, seed: int = 0) -> McEstimate:
    """Simulate, fit the two-regressor least squares on (tau W, (1-tau) G)
    with the analyst's tau, form the shift-effect estimate
    b_w mean(tau) + b_g (1 - mean(tau)), and return its empirical bias
    against beta_w* mean(tau*) + beta_g* (1 - mean(tau*))."""
    rng = np.random.default_rng(seed)
    biases = np.empty(reps)
    for rep in range(reps):
        tau_draw = cfg.tau_dist.sample(rng, n)
        if cfg.misspec == "scalar":
            tau, tau_star = tau_draw, cfg.c * tau_draw
        elif cfg.misspec == "noisy-assumed":
            tau_star = tau_draw
            tau = tau_star + _centered_eta(cfg, rng, n)
        elif cfg.misspec == "noisy-true":
            tau = tau_draw
            tau_star = tau + _centered_eta(cfg, rng, n)
        else:
            tau = tau_star = tau_draw
        w, g = _draw_wg(rng, cfg.rho, n)
        y = (
            cfg.beta_w * tau_star * w
            + cfg.beta_g * (1.0 - tau_star) * g
            + cfg.noise_sd * rng.standard_normal(n)
        )
        design = np.column_stack([tau * w, (1.0 - tau) * g])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        omega_hat = coef[0] * tau.mean() + coef[1] * (1.0 - tau.mean())
        omega = cfg.beta_w * tau_star.mean() + cfg.beta_g * (1.0 - tau_star.mean())
        biases[rep] = omega_hat - omega
    return McEstimate(float(biases.mean()), float(biases.std(ddof=1) / np.sqrt(reps)), reps)


def _mc_slope(
    s: LinearBiasSetting,
    regressor: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    reps: int,
    seed: int,
    noise_sd: float,
) -> McEstimate:
    rng = np.random.default_rng(seed)
    slopes = np.empty(reps)
    for rep in range(reps):
        w, g = _draw_wg(rng, s.rho, n)
        y = s.tau * s.beta_w * w + (1.0 - s.tau) * s.beta_g * g + noise_sd * rng.standard_normal(n)
        reg = regressor(w, g)
        design = np.column_stack([np.ones(n), reg])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        slopes[rep] = coef[1]
    return McEstimate(float(slopes.mean()), float(slopes.std(ddof=1) / np.sqrt(reps)), reps)


def mc_naive_slope(
    s: LinearBiasSetting, n: int = 100_000, reps: int = 50, seed: int = 0, noise_sd: float = 1.0
) -> McEstimate:
    """Empirical slope of Y on W alone; oracle for naive_slope."""
    return _mc_slope(s, lambda w, g: w, n, reps, seed, noise_sd)


def mc_star_slope(
    s: LinearBiasSetting, n: int = 100_000, reps: int = 50, seed: int = 0, noise_sd: float = 1.0
) -> McEstimate:
    """Empirical slope of Y on tau W + (1-tau) G; oracle for weighted_slope_star."""
    return _mc_slope(
        s, lambda w, g: s.tau * w + (1.0 - s.tau) * g, n, reps, seed, noise_sd
    )


# ---------------------------------------------------------------------------
# nonlinear marginal-curve and shift-effect gaps


@dataclass(frozen=True)
class CurveDgp:
    """Univariate joint law for (W, G, X) plus the true conditional mean.

    W and X are independent standard normals; G = rho W + g_on_x X + noise,
    scaled so G has unit variance. The conditional mean is
    effect_w(w) + effect_g(g) + x_coef * x.
    """

    rho: float = 0.0
    effect_w: Callable[[np.ndarray], np.ndarray] = lambda w: w
    effect_g: Callable[[np.ndarray], np.ndarray] = lambda g: np.zeros_like(g)
    x_coef: float = 0.0
    g_on_x: float = 0.0
    include_x: bool = False

    def sample(self, rng: np.random.Generator, size: int):
        w = rng.standard_normal(size)
        x = rng.standard_normal(size) if self.include_x else None
        resid_var = 1.0 - self.rho**2 - self.g_on_x**2
        if resid_var < 0:
            raise ValueError("rho^2 + g_on_x^2 must not exceed 1")
        g = self.rho * w + np.sqrt(resid_var) * rng.standard_normal(size)
        if x is not None:
            g = g + self.g_on_x * x
        return w, g, x

    def cond_mean(self, w, g, x=None):
        out = self.effect_w(np.asarray(w, dtype=float)) + self.effect_g(np.asarray(g, dtype=float))
        if self.include_x and x is not None:
            out = out + self.x_coef * np.asarray(x, dtype=float)
        return out


@dataclass(frozen=True)
class CurveGap:
    grid: np.ndarray
    curve: np.ndarray  # marginal curve, neighborhood exposure integrated out
    curve_naive: np.ndarray  # what ignoring the neighborhood exposure targets
    gap: np.ndarray  # curve - curve_naive

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"w": self.grid, "curve": self.curve, "curve_naive": self.curve_naive, "gap": self.gap}
        )


MIN_MC_DRAWS = 1000


def _warn_draws(mc_draws: int) -> None:
    if mc_draws < MIN_MC_DRAWS:
        warnings.warn(
            f"{mc_draws} Monte-Carlo draws is below the configured minimum of {MIN_MC_DRAWS}",
            InsufficientDraws,
            stacklevel=3,
        )


def _knn_indices(points: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    tree = cKDTree(points)
    _, idx = tree.query(queries, k=k)
    return np.atleast_2d(idx)


def naive_curve_gap(
    dgp: CurveDgp,
    w_grid: np.ndarray,
    mc_draws: int = 100_000,
    k: int | None = None,
    seed: int = 0,
    n_x_eval: int = 400,
) -> CurveGap:
    """Monte-Carlo gap between the marginal curve and its neighborhood-
    ignoring counterpart on a grid of home-exposure values.

    The marginal curve integrates the conditional mean over the product of
    the marginal G and X laws; the naive curve replaces the marginal G law
    with the conditional law of G given (W, X), approximated by k-nearest
    neighbours in (W, X) with k defaulting to ceil(sqrt(mc_draws)).
    """
    _warn_draws(mc_draws)
    rng = np.random.default_rng(seed)
    w_grid = np.asarray(w_grid, dtype=float)
    w, g, x = dgp.sample(rng, mc_draws)
    if k is None:
        k = int(np.ceil(np.sqrt(mc_draws)))
    curve = np.empty(w_grid.size)
    curve_naive = np.empty(w_grid.size)
    if x is None:
        order = np.argsort(w)
        w_sorted, g_sorted = w[order], g[order]
        for i, w0 in enumerate(w_grid):
            curve[i] = float(np.mean(dgp.cond_mean(w0, g)))
            pos = np.searchsorted(w_sorted, w0)
            lo = max(0, min(pos - k // 2, mc_draws - k))
            curve_naive[i] = float(np.mean(dgp.cond_mean(w0, g_sorted[lo : lo + k])))
    else:
        x_indep = rng.permutation(x)  # product measure: break the (G, X) pairing
        x_eval = x[rng.choice(mc_draws, size=min(n_x_eval, mc_draws), replace=False)]
        points = np.column_stack([w / w.std(), x / x.std()])
        for i, w0 in enumerate(w_grid):
            curve[i] = float(np.mean(dgp.cond_mean(w0, g, x_indep)))
            queries = np.column_stack(
                [np.full(x_eval.size, w0 / w.std()), x_eval / x.std()]
            )
            idx = _knn_indices(points, queries, k)
            vals = [
                float(np.mean(dgp.cond_mean(w0, g[idx[j]], x_eval[j])))
                for j in range(x_eval.size)
            ]
            curve_naive[i] = float(np.mean(vals))
    return CurveGap(grid=w_grid, curve=curve, curve_naive=curve_naive, gap=curve - curve_naive)


def lambda_naive_gap(
    dgp: CurveDgp,
    w: float,
    g: float,
    delta_w: float,
    delta_g: float,
    mc_draws: int = 100_000,
    k: int | None = None,
    seed: int = 0,
) -> float:
    """Monte-Carlo value of the four-term shift-effect gap (naive minus true).

    The two conditional terms average the conditional mean over the
    neighborhood exposure given W = w and W = w + delta_w respectively,
    using k-nearest-neighbour conditioning; the two fixed terms evaluate the
    conditional mean at the requested neighborhood levels. Identically zero
    when the conditional mean is free of the neighborhood exposure, and when
    delta_g = 0 with G independent of (W, X).
    """
    _warn_draws(mc_draws)
    rng = np.random.default_rng(seed)
    ws, gs, xs = dgp.sample(rng, mc_draws)
    if k is None:
        k = int(np.ceil(np.sqrt(mc_draws)))
    order = np.argsort(ws)
    w_sorted, g_sorted = ws[order], gs[order]
    x_sorted = xs[order] if xs is not None else None

    def cond_avg(w0: float) -> float:
        pos = np.searchsorted(w_sorted, w0)
        lo = max(0, min(pos - k // 2, mc_draws - k))
        g_loc = g_sorted[lo : lo + k]
        x_loc = x_sorted[lo : lo + k] if x_sorted is not None else None
        return float(np.mean(dgp.cond_mean(w0, g_loc, x_loc)))

    def fixed(w0: float, g0: float) -> float:
        if xs is None:
            return float(dgp.cond_mean(w0, g0))
        return float(np.mean(dgp.cond_mean(w0, np.full(xs.size, g0), xs)))

    return fixed(w, g) - cond_avg(w) + cond_avg(w + delta_w) - fixed(w + delta_w, g + delta_g)


# ---------------------------------------------------------------------------
# plot-ready tables for the standard diagnostic figures


def curve_gap_table(
    rhos=(-0.6, -0.3, 0.0, 0.3, 0.6),
    grid=None,
    mc_draws: int = 100_000,
    seed: int = 0,
) -> pd.DataFrame:
    """Marginal vs naive exposure-response curves by corr(W, G).

    Uses a curved home effect and a linear increasing neighborhood effect, so
    positive correlation steepens the naive curve and negative flattens it.
    """
    if grid is None:
        grid = np.linspace(-2.0, 2.0, 21)
    frames = []
    for i, rho in enumerate(rhos):
        dgp = CurveDgp(rho=rho, effect_w=lambda w: w + 0.3 * w**2, effect_g=lambda g: 0.5 * g)
        res = naive_curve_gap(dgp, grid, mc_draws=mc_draws, seed=seed + i)
        frame = res.to_frame()
        frame.insert(0, "rho", rho)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def scalar_misspec_table(
    c: float = 0.5,
    rho_grid=None,
    tau_dists: dict[str, Dist] | None = None,
    beta_g_star: float = 1.0,
) -> pd.DataFrame:
    """Scalar-misspecification bias against rho for several tau laws."""
    if rho_grid is None:
        rho_grid = np.linspace(0.0, 0.99, 100)
    if tau_dists is None:
        tau_dists = {
            "beta(0.006,0.006)": Dist("beta", (0.006, 0.006)),
            "beta(1,1)": Dist("beta", (1.0, 1.0)),
            "beta(148,1)": Dist("beta", (148.0, 1.0)),
            "beta(1,148)": Dist("beta", (1.0, 148.0)),
        }
    rows = []
    for name, dist in tau_dists.items():
        moments = TauMoments.from_dist(dist)
        for rho in rho_grid:
            rows.append(
                {
                    "tau_dist": name,
                    "rho": float(rho),
                    "c": c,
                    "bias": scalar_misspec_bias(c, float(rho), moments, beta_g_star),
                }
            )
    return pd.DataFrame(rows)


def xi_table(
    eta_sq_grid=None,
    tau_dists: dict[str, Dist] | None = None,
    beta_w_star: float = 1.0,
    beta_g_star: float = 1.0,
) -> pd.DataFrame:
    """Attenuation factors and bias against the noise second moment."""
    if eta_sq_grid is None:
        eta_sq_grid = np.linspace(0.0, 0.1, 101)
    if tau_dists is None:
        tau_dists = {
            "uniform(0.25,0.75)": Dist("uniform", (0.25, 0.75)),
            "beta(1,1)": Dist("beta", (1.0, 1.0)),
            "beta(30,10)": Dist("beta", (30.0, 10.0)),
            "beta(10,30)": Dist("beta", (10.0, 30.0)),
        }
    rows = []
    for name, dist in tau_dists.items():
        for eta_sq in eta_sq_grid:
            moments = TauMoments(
                mean=dist.mean,
                mean_sq=dist.raw_moment2,
                star_mean=dist.mean,
                star_mean_sq=dist.raw_moment2,
                eta_sq=float(eta_sq),
            )
            xi = measurement_error_xi(moments)
            rows.append(
                {
                    "tau_star_dist": name,
                    "eta_sq": float(eta_sq),
                    "xi_w": xi.xi_w,
                    "xi_g": xi.xi_g,
                    "bias": measurement_error_bias(moments, beta_w_star, beta_g_star),
                }
            )
    return pd.DataFrame(rows)
