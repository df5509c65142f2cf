"""Orthogonal polynomial expansions of exposure columns.

Each exposure column is standardized, raised to powers 1..M, and the monomial
block is orthogonalized against the constant and against lower degrees via a
thin QR factorization. The triangular monomial-to-orthogonal transform is
stored, so the same functions can be re-evaluated at counterfactual inputs:
fitting on one sample and evaluating on another never re-estimates anything.

Two normalizations are supported. ``normalize="norm"`` gives unit-norm columns
on the training sample (Phi' Phi = I per exposure); ``normalize="sd"`` scales
the same functions to unit variance per training row, which keeps regression
coefficients interpretable as per-standard-deviation effects independent of
the sample size. The two differ only by the fixed factor sqrt(n_train).
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumn, DimensionMismatch


@dataclass(frozen=True)
class BasisSpec:
    """Frozen per-column expansion state.

    transforms[j] maps the (M+1) standardized monomials (1, z, ..., z^M) of
    column j to its M basis functions.
    """

    degree: int
    centers: np.ndarray  # (q,)
    scales: np.ndarray  # (q,)
    transforms: np.ndarray  # (q, M+1, M)
    normalize: str = "norm"
    n_train: int = 0

    @property
    def q(self) -> int:
        return self.centers.shape[0]

    @property
    def n_terms(self) -> int:
        return self.q * self.degree

    def to_json(self) -> str:
        return json.dumps(
            {
                "degree": self.degree,
                "centers": self.centers.tolist(),
                "scales": self.scales.tolist(),
                "transforms": self.transforms.tolist(),
                "normalize": self.normalize,
                "n_train": self.n_train,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BasisSpec":
        d = json.loads(text)
        return cls(
            degree=int(d["degree"]),
            centers=np.asarray(d["centers"], dtype=float),
            scales=np.asarray(d["scales"], dtype=float),
            transforms=np.asarray(d["transforms"], dtype=float),
            normalize=d["normalize"],
            n_train=int(d["n_train"]),
        )


def fit_basis(values: np.ndarray, degree: int = 3, normalize: str = "norm") -> BasisSpec:
    """Fit per-column orthogonal polynomial bases of the given degree.

    Requires more rows than the degree and non-constant columns
    (DegenerateColumn otherwise).
    """
    if normalize not in ("norm", "sd"):
        raise ValueError(f"normalize must be 'norm' or 'sd', got {normalize!r}")
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, q = values.shape
    if n <= degree:
        raise DimensionMismatch(f"need more than degree={degree} rows, got {n}")
    centers = values.mean(axis=0)
    scales = values.std(axis=0)
    transforms = np.empty((q, degree + 1, degree))
    for j in range(q):
        if scales[j] == 0.0:
            raise DegenerateColumn(j)
        z = (values[:, j] - centers[j]) / scales[j]
        raw = np.vander(z, degree + 1, increasing=True)  # columns 1, z, ..., z^M
        qmat, rmat = np.linalg.qr(raw)
        # pin signs so the transform is deterministic across BLAS builds
        signs = np.sign(np.diag(rmat))
        signs[signs == 0] = 1.0
        rmat = rmat * signs[:, None]
        diag = np.abs(np.diag(rmat))
        if np.any(diag < 1e-10 * diag.max()):
            raise DegenerateColumn(j)
        tall = np.linalg.solve(rmat, np.eye(degree + 1))  # raw @ tall = Q
        if normalize == "sd":
            tall = tall * np.sqrt(n)
        transforms[j] = tall[:, 1:]
    return BasisSpec(
        degree=degree,
        centers=centers,
        scales=scales,
        transforms=transforms,
        normalize=normalize,
        n_train=n,
    )


def eval_basis(spec: BasisSpec, values: np.ndarray) -> np.ndarray:
    """Evaluate the frozen expansion at new points.

    Returns an (m, q*M) matrix ordered exposure-major: columns
    [phi_1(col 1), ..., phi_M(col 1), phi_1(col 2), ...]. Evaluating on the
    training matrix reproduces the fitted design exactly.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m, q = values.shape
    if q != spec.q:
        raise DimensionMismatch(f"expected {spec.q} exposure columns, got {q}")
    out = np.empty((m, q * spec.degree))
    for j in range(q):
        z = (values[:, j] - spec.centers[j]) / spec.scales[j]
        raw = np.vander(z, spec.degree + 1, increasing=True)
        out[:, j * spec.degree : (j + 1) * spec.degree] = raw @ spec.transforms[j]
    return out
