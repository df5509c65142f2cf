"""Mobility weights and neighborhood exposures.

A raw origin-destination time matrix ``T`` (entry ``T[i, j]`` = total
person-time that residents of region ``i`` spent in region ``j``) is reduced
to two objects:

* ``tau[i] = T[i, i] / sum_k T[i, k]`` -- the fraction of region ``i``'s
  person-time spent at home, and
* ``alpha[i, j] = T[i, j] / sum_{k != i} T[i, k]`` for ``j != i`` with
  ``alpha[i, i] = 0`` -- the share of away-time spent in each destination.

The neighborhood exposure of region ``i`` is the alpha-weighted average of the
other regions' home exposures, ``G[i] = sum_j alpha[i, j] * W[j]``.

Regions with no off-diagonal time get ``tau = 1`` and an all-zero alpha row;
they are flagged as isolated so downstream code can exclude them from
neighborhood-shifting interventions (with ``1 - tau = 0`` the neighborhood
term never contributes for them anyway).
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .errors import DimensionMismatch, InvariantViolation, ParseError, ZeroRowSum

# alpha is stored dense up to this many regions, row-compressed sparse above.
DENSE_LIMIT = 5000


@dataclass(frozen=True)
class MobilityMatrix:
    """Validated n-by-n matrix of nonnegative region-to-region time totals."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionMismatch(f"mobility matrix must be square, got {t.shape}")
        if not np.all(np.isfinite(t)):
            bad = np.argwhere(~np.isfinite(t))[0]
            raise InvariantViolation(f"non-finite entry at ({bad[0]}, {bad[1]})")
        if np.any(t < 0):
            bad = np.argwhere(t < 0)[0]
            raise InvariantViolation(f"negative time total at ({bad[0]}, {bad[1]})")
        rowsums = t.sum(axis=1)
        zero = np.flatnonzero(rowsums <= 0)
        if zero.size:
            raise ZeroRowSum(int(zero[0]))

    @property
    def n(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class MobilityWeights:
    """Home-time fractions and row-stochastic away-time shares."""

    tau: np.ndarray
    alpha: np.ndarray | sp.csr_matrix
    isolated: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.isolated is None:
            object.__setattr__(self, "isolated", np.zeros(len(self.tau), dtype=bool))

    @property
    def n(self) -> int:
        return self.tau.shape[0]


@dataclass(frozen=True)
class ExposurePanel:
    """Per-region data: home exposures w, neighborhood exposures g, tau, and
    optional covariates x / outcome y."""

    w: np.ndarray
    g: np.ndarray
    tau: np.ndarray
    x: np.ndarray | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        tau = np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "tau", tau)
        if self.x is not None:
            object.__setattr__(self, "x", np.atleast_2d(np.asarray(self.x, dtype=float)))
        if self.y is not None:
            object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        n, q = w.shape
        if g.shape != (n, q):
            raise DimensionMismatch(f"g has shape {g.shape}, expected {(n, q)}")
        if tau.shape != (n,):
            raise DimensionMismatch(f"tau has shape {tau.shape}, expected {(n,)}")
        if np.any((tau < 0) | (tau > 1)):
            raise InvariantViolation("tau entries must lie in [0, 1]")
        if self.x is not None and self.x.shape[0] != n:
            raise DimensionMismatch("x row count does not match panel")
        if self.y is not None and self.y.shape != (n,):
            raise DimensionMismatch("y length does not match panel")

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def q(self) -> int:
        return self.w.shape[1]

    @property
    def isolated(self) -> np.ndarray:
        # tau == 1 exactly iff the region had zero off-diagonal mass
        return self.tau >= 1.0


def compute_weights(t: MobilityMatrix | np.ndarray, dense_limit: int = DENSE_LIMIT) -> MobilityWeights:
    """Reduce a time matrix to (tau, alpha), flagging isolated regions."""
    if not isinstance(t, MobilityMatrix):
        t = MobilityMatrix(np.asarray(t))
    mat = t.t
    rowsums = mat.sum(axis=1)
    diag = np.diag(mat)
    tau = diag / rowsums
    off = mat.copy()
    np.fill_diagonal(off, 0.0)
    offsums = off.sum(axis=1)
    isolated = offsums == 0.0
    denom = np.where(isolated, 1.0, offsums)
    alpha = off / denom[:, None]
    # isolated rows have tau = T_ii / T_ii = 1 exactly
    if t.n > dense_limit:
        alpha = sp.csr_matrix(alpha)
    return MobilityWeights(tau=tau, alpha=alpha, isolated=isolated)


def neighborhood_exposure(weights: MobilityWeights, w: np.ndarray) -> np.ndarray:
    """G = alpha @ W; isolated rows come out identically zero."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] != weights.n:
        raise DimensionMismatch(
            f"exposure matrix has {w.shape[0]} rows, weights expect {weights.n}"
        )
    g = weights.alpha @ w
    return np.asarray(g)


def make_panel(
    weights: MobilityWeights,
    w: np.ndarray,
    x: np.ndarray | None = None,
    y: np.ndarray | None = None,
) -> ExposurePanel:
    """Build a panel whose g rows are the alpha-weighted home exposures."""
    g = neighborhood_exposure(weights, w)
    return ExposurePanel(w=w, g=g, tau=weights.tau, x=x, y=y)


def load_mobility_csv(path) -> MobilityMatrix:
    """Read an n x n headerless CSV of nonnegative time totals."""
    try:
        mat = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"could not parse mobility CSV {path}: {exc}") from exc
    return MobilityMatrix(mat)


def load_panel_csv(path) -> ExposurePanel:
    """Read a panel CSV with header ``y,tau,w1..wq,g1..gq[,x1..xp]``.

    The ``y`` column may be absent (prediction-only panels).
    """
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise ParseError(f"could not parse panel CSV {path}: {exc}") from exc
    cols = list(frame.columns)
    w_cols = [c for c in cols if c.startswith("w") and c[1:].isdigit()]
    g_cols = [c for c in cols if c.startswith("g") and c[1:].isdigit()]
    x_cols = [c for c in cols if c.startswith("x") and c[1:].isdigit()]
    if "tau" not in cols:
        raise ParseError(f"panel CSV {path} lacks a tau column")
    if len(w_cols) == 0 or len(w_cols) != len(g_cols):
        raise ParseError(
            f"panel CSV {path} needs matching w1..wq and g1..gq columns, "
            f"found {len(w_cols)} w and {len(g_cols)} g"
        )
    w_cols = sorted(w_cols, key=lambda c: int(c[1:]))
    g_cols = sorted(g_cols, key=lambda c: int(c[1:]))
    x_cols = sorted(x_cols, key=lambda c: int(c[1:]))
    return ExposurePanel(
        w=frame[w_cols].to_numpy(float),
        g=frame[g_cols].to_numpy(float),
        tau=frame["tau"].to_numpy(float),
        x=frame[x_cols].to_numpy(float) if x_cols else None,
        y=frame["y"].to_numpy(float) if "y" in cols else None,
    )


def save_panel_csv(panel: ExposurePanel, path) -> None:
    data = {}
    if panel.y is not None:
        data["y"] = panel.y
    data["tau"] = panel.tau
    for j in range(panel.q):
        data[f"w{j + 1}"] = panel.w[:, j]
    for j in range(panel.q):
        data[f"g{j + 1}"] = panel.g[:, j]
    if panel.x is not None:
        for j in range(panel.x.shape[1]):
            data[f"x{j + 1}"] = panel.x[:, j]
    pd.DataFrame(data).to_csv(path, index=False)
