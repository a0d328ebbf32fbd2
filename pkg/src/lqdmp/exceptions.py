"""Exception hierarchy shared by all lqdmp modules."""


class LQDMPError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(LQDMPError, ValueError):
    pass


class NotControllable(LQDMPError):
    """The pair (A, B) fails the rank test.

    Attributes
    ----------
    rank : int
        Number of independent columns found in [B AB ... A^{n-1}B].
    n : int
        State dimension.
    """

    def __init__(self, rank, n):
        self.rank = rank
        self.n = n
        super().__init__(
            f"(A, B) is not controllable: controllability matrix has rank "
            f"{rank} < n = {n} (deficit {n - rank})")


class RNotSPD(LQDMPError):
    """The control weight R is not symmetric positive definite."""

    def __init__(self, message, eigenvalue=None):
        self.eigenvalue = eigenvalue
        super().__init__(message)


class GramianFailure(LQDMPError):
    """Numerical failure while forming G(t) or exp(At)."""


class NotPositiveDefinite(GramianFailure):
    def __init__(self, t):
        self.t = t
        super().__init__(
            f"Cholesky factorization of G(t) failed at t = {t:.6g}; "
            "t is too small for the numerical rank of the Gramian")


class ExpOverflow(GramianFailure):
    def __init__(self, norm, cap):
        self.norm = norm
        self.cap = cap
        super().__init__(
            f"||M t||_1 = {norm:.6g} exceeds the exponential cap {cap:.6g}")


class NoConnection(LQDMPError):
    """No arrival time in (0, tau_max] gives a cost below the cap."""


class OutOfDomain(LQDMPError, ValueError):
    pass


class RejectionStall(LQDMPError):
    pass


class ScenarioError(LQDMPError):
    """Malformed or invalid scenario / experiment file."""


class CacheMismatch(LQDMPError):
    """Neighbor-cache header does not match the requested run."""


class DimensionError(LQDMPError, ValueError):
    pass
