"""Small scalar-distribution specs used for time-fraction and error laws.

Distributions are given on the command line (and in configs) as compact
strings, e.g. ``uniform:0.25:0.75``, ``beta:30:10``, ``point:0.5``. Each spec
exposes exact first and second raw moments alongside a sampler, so closed-form
bias functions and their Monte-Carlo oracles consume the same object.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError


@dataclass(frozen=True)
class Dist:
    kind: str
    params: tuple[float, ...]

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            a, b = self.params
            return 0.5 * (a + b)
        if self.kind == "beta":
            a, b = self.params
            return a / (a + b)
        return self.params[0]

    @property
    def raw_moment2(self) -> float:
        """E X^2, exact."""
        if self.kind == "uniform":
            a, b = self.params
            return (a * a + a * b + b * b) / 3.0
        if self.kind == "beta":
            a, b = self.params
            return a * (a + 1.0) / ((a + b) * (a + b + 1.0))
        v = self.params[0]
        return v * v

    @property
    def variance(self) -> float:
        return self.raw_moment2 - self.mean**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size)
        if self.kind == "beta":
            a, b = self.params
            return rng.beta(a, b, size)
        return np.full(size, self.params[0])

    def spec_string(self) -> str:
        return ":".join([self.kind] + [repr(p) for p in self.params])


def parse_dist(text: str) -> Dist:
    """Parse ``kind:params`` strings like ``uniform:0:1`` or ``point:0.7``."""
    parts = text.split(":")
    kind = parts[0].lower()
    try:
        params = tuple(float(p) for p in parts[1:])
    except ValueError as exc:
        raise ParseError(f"bad distribution spec {text!r}") from exc
    if kind == "uniform":
        if len(params) != 2 or params[0] >= params[1]:
            raise ParseError(f"uniform needs lo < hi, got {text!r}")
    elif kind == "beta":
        if len(params) != 2 or min(params) <= 0:
            raise ParseError(f"beta needs two positive shapes, got {text!r}")
    elif kind == "point":
        if len(params) != 1:
            raise ParseError(f"point needs one value, got {text!r}")
    else:
        raise ParseError(f"unknown distribution kind {kind!r}")
    return Dist(kind, params)
