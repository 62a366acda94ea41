"""Exception types shared across the package.

Two bases split failures the way the command line reports them: DataError for
inputs that violate a contract (bad matrices, bad files, mismatched shapes)
and NumericalError for computations that cannot be completed (singular
systems, non-convergence).
"""


class DataError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class NonFiniteError(DataError):
    """A matrix or vector contains NaN or infinity. Location is 1-based."""

    def __init__(self, location):
        self.location = tuple(int(i) for i in location)
        super().__init__(f"non-finite value at {self.location}")


class ConstantColumnError(DataError):
    """A column has zero variance. Column index is 1-based."""

    def __init__(self, column):
        self.column = int(column)
        super().__init__(f"column {self.column} is constant")


class TooFewSamplesError(DataError):
    def __init__(self, n, needed):
        self.n, self.needed = int(n), int(needed)
        super().__init__(f"need at least {self.needed} samples, got {self.n}")


class EmptyInputError(DataError):
    def __init__(self, what="input"):
        super().__init__(f"empty {what}")


class DegenerateTruthError(DataError):
    def __init__(self):
        super().__init__("truth adjacency has no edges; precision-recall is undefined")


class SingularInputError(DataError):
    def __init__(self, what):
        super().__init__(f"singular matrix: {what}")


class NotPositiveDefiniteError(DataError):
    def __init__(self, what):
        super().__init__(f"not positive definite: {what}")


class SingularSubmatrixError(NumericalError):
    """Covariance submatrix too ill-conditioned to invert (cond > 1e12)."""

    def __init__(self, i, j, cond):
        self.i, self.j, self.cond = int(i), int(j), float(cond)
        super().__init__(
            f"covariance submatrix for pair ({self.i + 1}, {self.j + 1}) is "
            f"singular (condition number {self.cond:.3g})"
        )


class InvalidEffectiveSizeError(NumericalError):
    def __init__(self, n, s_size):
        self.n, self.s_size = int(n), int(s_size)
        super().__init__(
            f"effective size n - |S| - 3 = {self.n - self.s_size - 3} is not positive "
            f"(n={self.n}, |S|={self.s_size})"
        )


class AllZeroWeightsError(NumericalError):
    def __init__(self):
        super().__init__("all combination weights are zero")


class EmptyWindowError(DataError):
    def __init__(self, t0, T):
        super().__init__(f"averaging window is empty (burn_in={t0}, iterations={T})")


class NotConvergedError(NumericalError):
    """Iteration limit reached. Carries the last iterate in .sigma."""

    def __init__(self, sweeps, delta, sigma):
        self.sweeps, self.delta, self.sigma = int(sweeps), float(delta), sigma
        super().__init__(
            f"covariance recovery did not converge in {self.sweeps} sweeps "
            f"(last change {self.delta:.3g})"
        )


class SingularCovarianceError(NumericalError):
    def __init__(self, k):
        self.k = int(k)
        super().__init__(f"covariance of component {self.k + 1} is singular")


class EmptyClusterError(NumericalError):
    def __init__(self, k):
        self.k = int(k)
        super().__init__(f"cluster {self.k + 1} is empty")


class EmptyClusterUnrepairableError(NumericalError):
    def __init__(self, k, tries):
        self.k = int(k)
        super().__init__(
            f"cluster {self.k + 1} could not be repaired to the minimum size "
            f"after {tries} consecutive attempts"
        )
