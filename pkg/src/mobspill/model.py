"""Gibbs sampler for the tau-weighted additive exposure model.

The outcome model is

    y_i = (tau_i phi(w_i) + (1-tau_i) phi(g_i)) beta + (1-tau_i) phi(g_i) zeta
          + x_i theta + eps_i,    eps_i ~ N(0, sigma^2),

where beta are the home-exposure coefficients and zeta is the gap between
neighborhood and home coefficients (gamma = beta + zeta multiplies phi(g)).
The tau weights are folded into the design once, so with
Phi_w[i] = tau_i * phi(w_i) and Phi_g[i] = (1 - tau_i) * phi(g_i) the model is
y ~ N((Phi_w + Phi_g) beta + Phi_g zeta + X theta, sigma^2 I).

Priors:

    beta | sigma^2, sigma_beta^2 ~ N(0, sigma^2 sigma_beta^2 I),  sigma_beta^2 ~ IG(1, 1)
    zeta_j | sigma^2, lambda_j^2, nu^2 ~ N(0, sigma^2 lambda_j^2 nu^2 I),
        lambda_j ~ C+(1) per exposure,  nu ~ C+(1) global       (shrinkage mode)
    zeta | sigma^2, sigma_zeta^2 ~ N(0, sigma^2 sigma_zeta^2 I), sigma_zeta^2 ~ IG(1, 1)
                                                                (non-shrinkage mode)
    theta | sigma^2 ~ N(0, sigma^2 sigma_theta^2 I)   (large fixed sigma_theta^2)
    sigma^2 ~ IG(1, 1)

The half-Cauchy scales are handled through the double inverse-gamma auxiliary
representation (lambda_j^2 | r_j ~ IG(1/2, 1/r_j), r_j ~ IG(1/2, 1), likewise
nu^2 with s), which makes every update conditionally conjugate. Because the
coefficient priors are scaled by sigma^2, the residual-variance update picks
up their quadratic forms and degree-of-freedom contributions.

A "naive" mode drops the neighborhood block entirely and regresses y on
phi(w) (+X) with the same Gaussian/IG priors; it is the no-mobility
comparator.
"""

import io
import json
import zipfile
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
import scipy.linalg

from .basis import BasisSpec, eval_basis
from .errors import MissingOutcome, NumericalFailure
from .mobility import ExposurePanel
from .rngs import named_stream

SHRINKAGE = "shrinkage"
GAUSSIAN = "non-shrinkage"
NAIVE = "naive"


@dataclass(frozen=True)
class FitConfig:
    """Chain lengths and the one free prior constant.

    All shrinkage prior constants are fixed at IG(1, 1) / C+(1); only the
    covariate prior variance is adjustable (it is meant to stay large).
    n_draws counts total sweeps per chain, burn-in included.
    """

    n_draws: int = 2000
    n_burnin: int = 500
    n_chains: int = 2
    thin: int = 1
    seed: int = 0
    sigma_theta2: float = 1e6

    def __post_init__(self):
        if self.n_draws <= 0 or self.thin < 1 or self.n_chains < 1:
            raise ValueError("n_draws > 0, thin >= 1, n_chains >= 1 required")
        if not 0 <= self.n_burnin < self.n_draws:
            raise ValueError("need 0 <= n_burnin < n_draws")

    @property
    def kept_per_chain(self) -> int:
        span = self.n_draws - self.n_burnin
        return (span + self.thin - 1) // self.thin


@dataclass(frozen=True)
class DesignMatrices:
    """Tau-weighted design blocks; rows follow the panel."""

    phi_w: np.ndarray  # (n, K) rows tau_i * phi(w_i)
    phi_g: np.ndarray  # (n, K) rows (1 - tau_i) * phi(g_i)
    x: np.ndarray | None  # (n, p)
    q: int
    degree: int

    @property
    def n(self) -> int:
        return self.phi_w.shape[0]

    @property
    def n_terms(self) -> int:
        return self.phi_w.shape[1]

    @property
    def p(self) -> int:
        return 0 if self.x is None else self.x.shape[1]

    @property
    def combined(self) -> np.ndarray:
        """[Phi_w + Phi_g | Phi_g | X] column block."""
        blocks = [self.phi_w + self.phi_g, self.phi_g]
        if self.x is not None:
            blocks.append(self.x)
        return np.hstack(blocks)


def build_design(panel: ExposurePanel, spec: BasisSpec) -> DesignMatrices:
    """Expand the panel exposures and fold the tau weights into the blocks."""
    if panel.y is None:
        raise MissingOutcome("panel has no outcome column")
    phi_w = panel.tau[:, None] * eval_basis(spec, panel.w)
    phi_g = (1.0 - panel.tau)[:, None] * eval_basis(spec, panel.g)
    return DesignMatrices(phi_w=phi_w, phi_g=phi_g, x=panel.x, q=spec.q, degree=spec.degree)


def naive_design(panel: ExposurePanel, spec: BasisSpec) -> DesignMatrices:
    """Design for the no-mobility regression: unweighted phi(w) only."""
    if panel.y is None:
        raise MissingOutcome("panel has no outcome column")
    phi = eval_basis(spec, panel.w)
    return DesignMatrices(
        phi_w=phi, phi_g=np.zeros_like(phi), x=panel.x, q=spec.q, degree=spec.degree
    )


@dataclass
class ModelState:
    """One point in the sampler's state space. Variance-role fields are > 0."""

    beta: np.ndarray
    zeta: np.ndarray | None
    theta: np.ndarray | None
    sigma2: float
    sigma_beta2: float
    lambda2: np.ndarray | None = None  # (q,) local scales, shrinkage mode
    nu2: float | None = None
    r: np.ndarray | None = None  # (q,) auxiliaries
    s: float | None = None
    sigma_zeta2: float | None = None  # non-shrinkage mode


def initial_state(design: DesignMatrices, mode: str) -> ModelState:
    """Coefficients start at zero, every variance at one."""
    k = design.n_terms
    q = design.q
    theta = np.zeros(design.p) if design.p else None
    if mode == SHRINKAGE:
        return ModelState(
            beta=np.zeros(k), zeta=np.zeros(k), theta=theta, sigma2=1.0,
            sigma_beta2=1.0, lambda2=np.ones(q), nu2=1.0, r=np.ones(q), s=1.0,
        )
    if mode == GAUSSIAN:
        return ModelState(
            beta=np.zeros(k), zeta=np.zeros(k), theta=theta, sigma2=1.0,
            sigma_beta2=1.0, sigma_zeta2=1.0,
        )
    if mode == NAIVE:
        return ModelState(beta=np.zeros(k), zeta=None, theta=theta, sigma2=1.0, sigma_beta2=1.0)
    raise ValueError(f"unknown mode {mode!r}")


def draw_invgamma(rng: np.random.Generator, shape: float, rate: float) -> float:
    """IG(shape, rate) draw, density proportional to x^(-shape-1) exp(-rate/x)."""
    g = rng.gamma(shape, 1.0 / rate)
    if g <= 0.0 or not np.isfinite(g):
        raise NumericalFailure("inverse-gamma draw underflowed")
    return 1.0 / g


def draw_mvn_precision(
    rng: np.random.Generator, prec: np.ndarray, rhs: np.ndarray, sigma2: float
) -> np.ndarray:
    """Draw from N(prec^-1 rhs, sigma2 * prec^-1) with a one-shot jitter retry."""
    try:
        chol = scipy.linalg.cholesky(prec, lower=True)
    except (scipy.linalg.LinAlgError, ValueError):
        try:
            chol = scipy.linalg.cholesky(prec + 1e-10 * np.eye(prec.shape[0]), lower=True)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure("posterior precision not positive definite") from exc
    mean = scipy.linalg.cho_solve((chol, True), rhs)
    z = rng.standard_normal(prec.shape[0])
    return mean + np.sqrt(sigma2) * scipy.linalg.solve_triangular(chol.T, z, lower=False)


def _lambda_star_inv(state: ModelState, degree: int) -> np.ndarray:
    """Diagonal of (nu^2 Lambda)^-1, each local scale repeated degree times."""
    return np.repeat(1.0 / state.lambda2, degree) / state.nu2


def gibbs_step(
    state: ModelState,
    design: DesignMatrices,
    y: np.ndarray,
    rng: np.random.Generator,
    mode: str = SHRINKAGE,
    sigma_theta2: float = 1e6,
) -> ModelState:
    """One full sweep in fixed order: beta, sigma_beta^2, zeta, local scales
    and auxiliaries, global scale and auxiliary (or sigma_zeta^2), theta,
    sigma^2. Any full-sweep order would be valid; this one is fixed for
    reproducibility.
    """
    k = design.n_terms
    q, m = design.q, design.degree
    n, p = design.n, design.p
    comb = design.phi_w + design.phi_g
    x = design.x
    state = replace(state)

    y_theta = y - x @ state.theta if p else y

    # beta | rest: Gaussian with precision (C'C + I/sigma_beta^2) / sigma^2
    resid_b = y_theta - design.phi_g @ state.zeta if state.zeta is not None else y_theta
    prec_b = comb.T @ comb + np.eye(k) / state.sigma_beta2
    state.beta = draw_mvn_precision(rng, prec_b, comb.T @ resid_b, state.sigma2)

    state.sigma_beta2 = draw_invgamma(
        rng, 1.0 + 0.5 * k, 1.0 + 0.5 * float(state.beta @ state.beta) / state.sigma2
    )

    zeta_quad = 0.0  # zeta' (prior scale)^-1 zeta, reused by the sigma^2 update
    if mode == SHRINKAGE:
        lam_inv = _lambda_star_inv(state, m)
        resid_z = y_theta - comb @ state.beta
        prec_z = design.phi_g.T @ design.phi_g + np.diag(lam_inv)
        state.zeta = draw_mvn_precision(rng, prec_z, design.phi_g.T @ resid_z, state.sigma2)
        block_ss = np.einsum("jm,jm->j", state.zeta.reshape(q, m), state.zeta.reshape(q, m))
        state.lambda2 = np.array(
            [
                draw_invgamma(
                    rng,
                    0.5 * (1.0 + m),
                    1.0 / state.r[j] + 0.5 * block_ss[j] / (state.sigma2 * state.nu2),
                )
                for j in range(q)
            ]
        )
        state.r = np.array(
            [draw_invgamma(rng, 1.0, 1.0 + 1.0 / state.lambda2[j]) for j in range(q)]
        )
        lam_only_quad = float(np.sum(block_ss / state.lambda2))
        state.nu2 = draw_invgamma(
            rng, 0.5 * (1.0 + k), 1.0 / state.s + 0.5 * lam_only_quad / state.sigma2
        )
        state.s = draw_invgamma(rng, 1.0, 1.0 + 1.0 / state.nu2)
        zeta_quad = float(state.zeta @ (state.zeta * _lambda_star_inv(state, m)))
    elif mode == GAUSSIAN:
        resid_z = y_theta - comb @ state.beta
        prec_z = design.phi_g.T @ design.phi_g + np.eye(k) / state.sigma_zeta2
        state.zeta = draw_mvn_precision(rng, prec_z, design.phi_g.T @ resid_z, state.sigma2)
        state.sigma_zeta2 = draw_invgamma(
            rng, 1.0 + 0.5 * k, 1.0 + 0.5 * float(state.zeta @ state.zeta) / state.sigma2
        )
        zeta_quad = float(state.zeta @ state.zeta) / state.sigma_zeta2
    elif mode != NAIVE:
        raise ValueError(f"unknown mode {mode!r}")

    fitted = comb @ state.beta
    if state.zeta is not None:
        fitted = fitted + design.phi_g @ state.zeta
    if p:
        prec_t = x.T @ x + np.eye(p) / sigma_theta2
        state.theta = draw_mvn_precision(rng, prec_t, x.T @ (y - fitted), state.sigma2)

    # sigma^2: IG(1,1) prior plus likelihood plus the sigma^2-scaled prior terms
    resid = y - fitted
    if p:
        resid = resid - x @ state.theta
    rss = float(resid @ resid)
    shape = 1.0 + 0.5 * n + 0.5 * k
    rate = 1.0 + 0.5 * (rss + float(state.beta @ state.beta) / state.sigma_beta2)
    if state.zeta is not None:
        shape += 0.5 * k
        rate += 0.5 * zeta_quad
    if p:
        shape += 0.5 * p
        rate += 0.5 * float(state.theta @ state.theta) / sigma_theta2
    state.sigma2 = draw_invgamma(rng, shape, rate)

    _check_finite(state)
    return state


def _check_finite(state: ModelState) -> None:
    for name in ("sigma2", "sigma_beta2", "nu2", "s", "sigma_zeta2"):
        v = getattr(state, name)
        if v is not None and (not np.isfinite(v) or v <= 0):
            raise NumericalFailure(f"{name} left (0, inf): {v}")
    for name in ("beta", "zeta", "theta"):
        v = getattr(state, name)
        if v is not None and not np.all(np.isfinite(v)):
            raise NumericalFailure(f"{name} contains non-finite draws")
    for name in ("lambda2", "r"):
        v = getattr(state, name)
        if v is not None and (np.any(~np.isfinite(v)) or np.any(v <= 0)):
            raise NumericalFailure(f"{name} left (0, inf)")


@dataclass
class PosteriorDraws:
    """Post-burnin, thinned chain output plus the frozen basis and metadata."""

    beta: np.ndarray  # (B, K)
    sigma2: np.ndarray  # (B,)
    sigma_beta2: np.ndarray  # (B,)
    chain: np.ndarray  # (B,) chain labels
    spec: BasisSpec
    meta: dict
    zeta: np.ndarray | None = None
    theta: np.ndarray | None = None
    lambda2: np.ndarray | None = None
    nu2: np.ndarray | None = None
    sigma_zeta2: np.ndarray | None = None

    _ARRAY_NAMES = ("beta", "zeta", "theta", "sigma2", "sigma_beta2", "lambda2",
                    "nu2", "sigma_zeta2", "chain")

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]

    @property
    def mode(self) -> str:
        return self.meta["mode"]

    def gamma(self) -> np.ndarray:
        """Neighborhood-block coefficients beta + zeta per draw."""
        return self.beta if self.zeta is None else self.beta + self.zeta

    def save(self, path) -> None:
        """Columnar binary container (zip of .npy columns) with a JSON header."""
        header = {
            "schema_version": 1,
            "meta": self.meta,
            "basis": json.loads(self.spec.to_json()),
            "arrays": [a for a in self._ARRAY_NAMES if getattr(self, a) is not None],
        }
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("header.json", json.dumps(header))
            for name in header["arrays"]:
                buf = io.BytesIO()
                np.save(buf, getattr(self, name))
                zf.writestr(f"{name}.npy", buf.getvalue())

    @classmethod
    def load(cls, path) -> "PosteriorDraws":
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            arrays = {
                name: np.load(io.BytesIO(zf.read(f"{name}.npy")))
                for name in header["arrays"]
            }
        return cls(
            spec=BasisSpec.from_json(json.dumps(header["basis"])),
            meta=header["meta"],
            **arrays,
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per draw, columns labelled by parameter."""
        data = {"chain": self.chain, "sigma2": self.sigma2, "sigma_beta2": self.sigma_beta2}
        for j in range(self.beta.shape[1]):
            data[f"beta_{j + 1}"] = self.beta[:, j]
        if self.zeta is not None:
            for j in range(self.zeta.shape[1]):
                data[f"zeta_{j + 1}"] = self.zeta[:, j]
        if self.theta is not None:
            for j in range(self.theta.shape[1]):
                data[f"theta_{j + 1}"] = self.theta[:, j]
        if self.lambda2 is not None:
            for j in range(self.lambda2.shape[1]):
                data[f"lambda2_{j + 1}"] = self.lambda2[:, j]
        if self.nu2 is not None:
            data["nu2"] = self.nu2
        if self.sigma_zeta2 is not None:
            data["sigma_zeta2"] = self.sigma_zeta2
        return pd.DataFrame(data)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def run_chain(
    design: DesignMatrices,
    y: np.ndarray,
    cfg: FitConfig,
    mode: str,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Run one chain; returns kept draws stacked per parameter."""
    state = initial_state(design, mode)
    kept: dict[str, list] = {name: [] for name in ("beta", "zeta", "theta", "sigma2",
                                                   "sigma_beta2", "lambda2", "nu2",
                                                   "sigma_zeta2")}
    for sweep in range(cfg.n_draws):
        try:
            state = gibbs_step(state, design, y, rng, mode=mode,
                               sigma_theta2=cfg.sigma_theta2)
        except NumericalFailure as exc:
            raise NumericalFailure(str(exc), sweep=sweep) from exc
        if sweep >= cfg.n_burnin and (sweep - cfg.n_burnin) % cfg.thin == 0:
            kept["beta"].append(state.beta.copy())
            kept["sigma2"].append(state.sigma2)
            kept["sigma_beta2"].append(state.sigma_beta2)
            if state.zeta is not None:
                kept["zeta"].append(state.zeta.copy())
            if state.theta is not None:
                kept["theta"].append(state.theta.copy())
            if state.lambda2 is not None:
                kept["lambda2"].append(state.lambda2.copy())
            if state.nu2 is not None:
                kept["nu2"].append(state.nu2)
            if state.sigma_zeta2 is not None:
                kept["sigma_zeta2"].append(state.sigma_zeta2)
    return {k: np.asarray(v) for k, v in kept.items() if v}


def _fit_mode(panel: ExposurePanel, spec: BasisSpec, cfg: FitConfig, mode: str) -> PosteriorDraws:
    design = naive_design(panel, spec) if mode == NAIVE else build_design(panel, spec)
    per_chain = []
    for c in range(cfg.n_chains):
        rng = named_stream(cfg.seed, "fit", index=c)
        per_chain.append(run_chain(design, panel.y, cfg, mode, rng))
    merged = {key: np.concatenate([d[key] for d in per_chain], axis=0) for key in per_chain[0]}
    chain_labels = np.repeat(np.arange(cfg.n_chains), cfg.kept_per_chain)
    meta = {
        "mode": mode,
        "q": spec.q,
        "degree": spec.degree,
        "p": design.p,
        "n": panel.n,
        "seed": cfg.seed,
        "n_draws": cfg.n_draws,
        "n_burnin": cfg.n_burnin,
        "n_chains": cfg.n_chains,
        "thin": cfg.thin,
        "sigma_theta2": cfg.sigma_theta2,
    }
    return PosteriorDraws(
        beta=merged["beta"],
        zeta=merged.get("zeta"),
        theta=merged.get("theta"),
        sigma2=merged["sigma2"],
        sigma_beta2=merged["sigma_beta2"],
        lambda2=merged.get("lambda2"),
        nu2=merged.get("nu2"),
        sigma_zeta2=merged.get("sigma_zeta2"),
        chain=chain_labels,
        spec=spec,
        meta=meta,
    )


def fit(
    panel: ExposurePanel, spec: BasisSpec, cfg: FitConfig, shrinkage: bool = True
) -> PosteriorDraws:
    """Fit the mobility-aware model, horseshoe gap prior by default.

    With shrinkage=False the gap keeps the same Gaussian/inverse-gamma
    structure as the home coefficients instead.
    """
    return _fit_mode(panel, spec, cfg, SHRINKAGE if shrinkage else GAUSSIAN)


def fit_naive(panel: ExposurePanel, spec: BasisSpec, cfg: FitConfig) -> PosteriorDraws:
    """No-mobility comparator: regression of y on phi(w) (+X) only."""
    return _fit_mode(panel, spec, cfg, NAIVE)
