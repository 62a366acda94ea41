"""Input validation and the value types passed between stages.

All containers are immutable: arrays are stored with the writeable flag
cleared, and the dataclasses are frozen. Indices are 0-based internally;
only error messages and written reports use 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantColumnError,
    DataError,
    NonFiniteError,
    TooFewSamplesError,
)


def frozen(a, dtype=None):
    """Return a C-contiguous read-only copy of `a`."""
    out = np.array(a, dtype=dtype, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DataMatrix:
    """Validated observation matrix, rows = samples, columns = variables."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def validate_data(raw) -> DataMatrix:
    """Check a raw observation matrix and wrap it as a DataMatrix.

    Rejects: fewer than 2 rows or 2 columns, non-finite entries (reported with
    1-based (row, column)), and constant columns.
    """
    X = np.asarray(raw, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise DataError("expected a nonempty 2-d observation matrix")
    n, p = X.shape
    if n < 2:
        raise TooFewSamplesError(n, 2)
    if p < 2:
        raise DataError(f"need at least 2 variables, got {p}")
    bad = ~np.isfinite(X)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFiniteError((r + 1, c + 1))
    spread = X.max(axis=0) - X.min(axis=0)
    if (spread == 0).any():
        raise ConstantColumnError(int(np.flatnonzero(spread == 0)[0]) + 1)
    return DataMatrix(frozen(X))


def as_data(X) -> DataMatrix:
    """Pass a DataMatrix through, validate anything else."""
    if isinstance(X, DataMatrix):
        return X
    return validate_data(X)


def check_adjacency(adj, p=None) -> np.ndarray:
    """Validate an adjacency matrix: square boolean, symmetric, zero diagonal."""
    E = np.asarray(adj)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise DataError("adjacency must be square")
    if p is not None and E.shape[0] != p:
        raise DataError(f"adjacency is {E.shape[0]}x{E.shape[0]}, expected {p}x{p}")
    E = E.astype(bool)
    if E.diagonal().any():
        raise DataError("adjacency has nonzero diagonal")
    if (E != E.T).any():
        raise DataError("adjacency is not symmetric")
    return frozen(E)


def edge_count(adj) -> int:
    """Number of upper-triangle edges."""
    E = np.asarray(adj, dtype=bool)
    return int(np.triu(E, 1).sum())


def edge_list(adj):
    """Upper-triangle edges as an array of (i, j) index pairs, i < j."""
    E = np.asarray(adj, dtype=bool)
    i, j = np.nonzero(np.triu(E, 1))
    return np.column_stack([i, j])


@dataclass(frozen=True)
class NeighborhoodMap:
    """Per-variable candidate conditioning neighborhoods.

    neighbors[i] holds the indices screened for variable i, ordered by
    decreasing |correlation| with i, already truncated to the size cap.
    """

    neighbors: tuple

    @property
    def p(self) -> int:
        return len(self.neighbors)

    def __getitem__(self, i):
        return self.neighbors[i]


@dataclass(frozen=True)
class CorrelationNetwork:
    """Empirical correlation matrix plus the significance-screened adjacency."""

    corr: np.ndarray
    screened: np.ndarray


@dataclass(frozen=True)
class PsiMatrix:
    """Reduced-set partial correlations and the conditioning-set sizes used.

    psi is symmetric with unit diagonal; cond_sizes[i, j] is |S_ij| (0 on the
    diagonal).
    """

    psi: np.ndarray
    cond_sizes: np.ndarray

    @property
    def p(self) -> int:
        return self.psi.shape[0]


@dataclass(frozen=True)
class MixtureParams:
    """Gaussian mixture parameters, optionally tied to a shared adjacency.

    pi: (M,) mixing proportions; mu: (M, p) means; sigma: (M, p, p)
    covariances. adjacency is the shared edge pattern the precision matrices
    respect, or None for dense estimates.
    """

    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    adjacency: np.ndarray | None = None

    def __post_init__(self):
        pi = frozen(self.pi, float)
        mu = frozen(np.atleast_2d(self.mu), float)
        sigma = frozen(self.sigma, float)
        if pi.ndim != 1:
            raise DataError("pi must be a vector")
        M = pi.shape[0]
        if (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-8:
            raise DataError("pi is not a probability vector")
        if mu.shape[0] != M or sigma.shape[0] != M:
            raise DataError("pi, mu, sigma disagree on the number of components")
        if sigma.ndim != 3 or sigma.shape[1] != sigma.shape[2] or sigma.shape[1] != mu.shape[1]:
            raise DataError("sigma must be (M, p, p) matching mu")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        if self.adjacency is not None:
            object.__setattr__(self, "adjacency", check_adjacency(self.adjacency, mu.shape[1]))

    @property
    def M(self) -> int:
        return self.pi.shape[0]

    @property
    def p(self) -> int:
        return self.mu.shape[1]


def check_posterior(gamma, n=None, M=None) -> np.ndarray:
    """Validate a posterior-probability matrix: rows on the simplex."""
    G = np.asarray(gamma, dtype=float)
    if G.ndim != 2:
        raise DataError("posterior matrix must be 2-d")
    if n is not None and G.shape[0] != n:
        raise DataError("posterior rows do not match the sample count")
    if M is not None and G.shape[1] != M:
        raise DataError("posterior columns do not match the component count")
    if not np.isfinite(G).all():
        raise NonFiniteError(tuple(np.argwhere(~np.isfinite(G))[0] + 1))
    if (G < 0).any() or np.abs(G.sum(axis=1) - 1.0).max() > 1e-12:
        raise DataError("posterior rows must sum to 1 within 1e-12")
    return G
