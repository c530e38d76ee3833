from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from src.synthgen.dgp import STAIRCASE_STEPS, staircase_bins


@dataclass(frozen=True)
class Encoder:
    """One-hot block encoding of the discretized covariates: 6 indicators per dimension."""

    d: int
    bins_per_dim: int = STAIRCASE_STEPS + 1

    @property
    def n_features(self) -> int:
        return self.d * self.bins_per_dim


def encode(x: npt.ArrayLike, encoder: Encoder) -> np.ndarray:
    """
    Encode one covariate vector, or an (n, d) matrix, into 0/1 indicator blocks.

    Block j has its active index at ceil(5 x_j), using the staircase scorer's bin rule.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != encoder.d:
        raise ValueError(f"expected {encoder.d} covariates, got {rows.shape[1]}")
    if rows.size and (rows.min() < 0.0 or rows.max() > 1.0 or np.isnan(rows).any()):
        raise ValueError("covariates must lie in [0, 1] to be encoded")

    bins = staircase_bins(rows)
    encoded = np.zeros((rows.shape[0], encoder.n_features), dtype=np.float64)
    offsets = np.arange(encoder.d) * encoder.bins_per_dim
    encoded[np.arange(rows.shape[0])[:, None], offsets + bins] = 1.0
    return encoded[0] if single else encoded


def auto_gamma(encoded: npt.ArrayLike) -> float:
    """RBF bandwidth 1 / (n_features * Var(all entries)), population variance."""
    matrix = np.atleast_2d(np.asarray(encoded, dtype=np.float64))
    variance = matrix.var()
    if variance == 0.0:
        raise ValueError("auto_gamma is undefined for a constant matrix (zero variance)")
    return 1.0 / (matrix.shape[1] * variance)
