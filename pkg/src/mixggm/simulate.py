"""Benchmark designs: banded-precision Gaussian mixtures.

Each component k has precision matrix C with 1 on the diagonal, c_k on the
first off-diagonal band and c_k/2 on the second, so the true network is the
two-band pattern |i - j| <= 2. Component means sit at 0 and +-m * 1_p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix, check_adjacency, frozen, validate_data
from .errors import DataError, NotPositiveDefiniteError


def banded_precision(p, c) -> np.ndarray:
    """Two-band precision matrix: diag 1, band-1 entries c, band-2 entries c/2.

    Raises NotPositiveDefiniteError when the resulting matrix is not PD
    (for this family that happens once c >= 2/3 at large p).
    """
    if p < 1:
        raise DataError(f"p must be positive, got {p}")
    c = float(c)
    C = np.eye(p)
    idx = np.arange(p - 1)
    C[idx, idx + 1] = C[idx + 1, idx] = c
    idx = np.arange(p - 2)
    C[idx, idx + 2] = C[idx + 2, idx] = c / 2.0
    if np.linalg.eigvalsh(C)[0] <= 0:
        raise NotPositiveDefiniteError(f"banded precision with c={c}, p={p}")
    return C


def band_adjacency(p) -> np.ndarray:
    """True network of the banded designs: edges at |i - j| in {1, 2}."""
    i, j = np.indices((p, p))
    d = np.abs(i - j)
    return check_adjacency((d == 1) | (d == 2))


def mean_layout(M, m, p) -> np.ndarray:
    """Component means: M=1 -> {0}; M=2 -> {+m, -m}; M=3 -> {0, +m, -m}."""
    m = float(m)
    ones = np.ones(p)
    if M == 1:
        rows = [np.zeros(p)]
    elif M == 2:
        rows = [m * ones, -m * ones]
    elif M == 3:
        rows = [np.zeros(p), m * ones, -m * ones]
    else:
        raise DataError(f"mean layout defined for M in {{1, 2, 3}}, got {M}")
    return np.stack(rows)


@dataclass(frozen=True)
class SimDesign:
    """A mixture simulation design.

    M components in dimension p, n_per samples each, mean offset m, band
    strengths c (one per component). Rows are shuffled; `seed` drives all
    sampling.
    """

    M: int
    p: int
    n_per: int
    m: float
    c: tuple
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.p < 2 or self.n_per < 1:
            raise DataError("need M >= 1, p >= 2, n_per >= 1")
        c = self.c if isinstance(self.c, (tuple, list, np.ndarray)) else (self.c,) * self.M
        c = tuple(float(v) for v in c)
        if len(c) != self.M:
            raise DataError(f"need one band strength per component, got {len(c)} for M={self.M}")
        object.__setattr__(self, "c", c)
        mean_layout(self.M, self.m, self.p)  # validates M
        for v in c:
            banded_precision(self.p, v)  # validates positive definiteness

    @property
    def n(self) -> int:
        return self.M * self.n_per


class SimData:
    """simulate_mixture output bundle."""

    def __init__(self, data, labels, adjacency, sigma, design):
        self.data: DataMatrix = data
        self.labels = labels
        self.adjacency = adjacency
        self.sigma = sigma
        self.design = design


def simulate_mixture(design: SimDesign) -> SimData:
    """Draw a shuffled sample from the design.

    Returns SimData with the validated data matrix, true labels (0-based),
    the true adjacency (shared two-band pattern), and the list of true
    component covariances.
    """
    rng = np.random.default_rng(design.seed)
    mus = mean_layout(design.M, design.m, design.p)
    sigmas = []
    blocks = []
    labels = []
    for k in range(design.M):
        C = banded_precision(design.p, design.c[k])
        S = np.linalg.inv(C)
        S = (S + S.T) / 2.0
        L = np.linalg.cholesky(S)
        Z = rng.standard_normal((design.n_per, design.p))
        blocks.append(mus[k] + Z @ L.T)
        labels.append(np.full(design.n_per, k, dtype=np.intp))
        sigmas.append(frozen(S))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    perm = rng.permutation(design.n)
    return SimData(
        data=validate_data(X[perm]),
        labels=frozen(y[perm], np.intp),
        adjacency=band_adjacency(design.p),
        sigma=tuple(sigmas),
        design=design,
    )
