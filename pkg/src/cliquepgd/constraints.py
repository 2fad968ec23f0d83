"""Convex constraint sets with exact projections in a weighted norm.

Every set supports ``project(x, w)``: the minimizer of ||z - x||_W over the
set, W = diag(w) with strictly positive weights. With w = 1 this is the
ordinary Euclidean projection (used by Dykstra and the PGD baseline).
Projections onto affine-type sets are closed-form; the weighted ball uses a
safeguarded Newton iteration on the scalar dual variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSetError, InputError, OracleError

FEASIBILITY_TOL = 1e-10
_RANK_CUTOFF = 1e-12


def weighted_norm(v: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.dot(w * v, v)))


def _check_dims(set_dim, x, w):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or w.shape != x.shape:
        raise InputError(f"expected 1-d x and matching weights, got {x.shape} / {w.shape}")
    if set_dim is not None and x.size != set_dim:
        raise InputError(f"point has dim {x.size}, set expects {set_dim}")
    if np.any(w <= 0):
        raise InputError("weights must be strictly positive")
    return x, w


class ConvexSet:
    """Interface shared by all constraint-set variants."""

    dim: int | None = None  # None means any dimension is accepted

    def project(self, x, w):
        raise NotImplementedError

    def residual(self, x) -> float:
        """Distance-like feasibility measure; 0 iff x is in the set."""
        raise NotImplementedError

    def contains(self, x, tol: float = FEASIBILITY_TOL) -> bool:
        return self.residual(np.asarray(x, dtype=float)) <= tol


class FullSpace(ConvexSet):
    """Trivial set: the whole space. Projection is the identity."""

    def project(self, x, w):
        x, _ = _check_dims(None, x, w)
        return x

    def residual(self, x):
        return 0.0


@dataclass
class AffineEquality(ConvexSet):
    """{z : A z = b}. Consistency is checked at construction; projections
    cache the Cholesky factor of A W^-1 A^T per weight vector."""

    A: np.ndarray
    b: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if self.A.shape[0] != self.b.size:
            raise InputError("A and b row counts differ")
        self.dim = self.A.shape[1]
        sv = np.linalg.svd(self.A, compute_uv=False)
        smax = sv[0] if sv.size else 0.0
        self._rank = int(np.sum(sv > _RANK_CUTOFF * max(smax, 1.0)))
        self._full_rank = self._rank == self.A.shape[0]
        # consistent iff b is in range(A)
        z, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        res = np.linalg.norm(self.A @ z - self.b)
        if res > 1e-8 * (1.0 + np.linalg.norm(self.b)):
            raise InfeasibleSetError(f"A z = b has no solution (residual {res:.3e})")

    def project(self, x, w):
        x, w = _check_dims(self.dim, x, w)
        key = w.tobytes()
        solver = self._cache.get(key)
        if solver is None:
            Awi = self.A / w  # A W^-1
            M = Awi @ self.A.T
            if self._full_rank:
                L = np.linalg.cholesky(M)

                def solver(r, L=L):
                    y = np.linalg.solve(L, r)
                    return np.linalg.solve(L.T, y)

            else:
                Mp = np.linalg.pinv(M, rcond=_RANK_CUTOFF)

                def solver(r, Mp=Mp):
                    return Mp @ r

            self._cache[key] = solver
        lam = solver(self.A @ x - self.b)
        return x - (self.A.T @ lam) / w

    def residual(self, x):
        return float(np.linalg.norm(self.A @ x - self.b, ord=np.inf))


@dataclass
class SumEquality(ConvexSet):
    """{z : sum(z) = target}."""

    target: float

    def project(self, x, w):
        x, w = _check_dims(None, x, w)
        nu = (x.sum() - self.target) / np.sum(1.0 / w)
        return x - nu / w

    def residual(self, x):
        return abs(float(np.sum(x)) - self.target)


@dataclass
class Ball(ConvexSet):
    """Euclidean ball {z : ||z - center|| <= radius}. The set itself is
    unweighted; the projection still minimizes the weighted norm."""

    center: np.ndarray
    radius: float
    newton_tol: float = 1e-12
    max_newton: int = 200

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise InputError("ball radius must be positive")
        self.dim = self.center.size

    def project(self, x, w):
        x, w = _check_dims(self.dim, x, w)
        u = x - self.center
        r = float(np.linalg.norm(u))
        if r <= self.radius:
            return x
        if np.ptp(w) == 0.0:
            return self.center + (self.radius / r) * u
        return self.center + _ball_dual_newton(
            u, w, self.radius, self.newton_tol, self.max_newton
        )

    def residual(self, x):
        return max(0.0, float(np.linalg.norm(x - self.center)) - self.radius)


def _ball_dual_newton(u, w, radius, tol, max_iter):
    """Solve ||z(lam)|| = radius for lam >= 0 with z_j = w_j u_j / (w_j + lam).

    phi(lam) = ||z(lam)|| - radius is strictly decreasing; Newton steps are
    safeguarded by a bracketing bisection fallback.
    """
    lo = 0.0
    hi = w.max() * np.linalg.norm(u) / radius  # phi(hi) <= 0
    lam = 0.0
    for _ in range(max_iter):
        z = w * u / (w + lam)
        nz = np.linalg.norm(z)
        phi = nz - radius
        if abs(phi) <= tol:
            return z
        if phi > 0:
            lo = lam
        else:
            hi = lam
        dphi = -np.sum(w**2 * u**2 / (w + lam) ** 3) / nz
        step = lam - phi / dphi
        lam = step if lo < step < hi else 0.5 * (lo + hi)
    raise OracleError(f"ball dual Newton did not reach tol {tol}")


@dataclass
class Halfspace(ConvexSet):
    """{z : a^T z <= b}."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if not np.any(self.a):
            raise InputError("halfspace normal must be nonzero")
        self.dim = self.a.size

    def project(self, x, w):
        x, w = _check_dims(self.dim, x, w)
        slack = float(self.a @ x) - self.b
        if slack <= 0:
            return x
        return x - (self.a / w) * (slack / float(self.a @ (self.a / w)))

    def residual(self, x):
        return max(0.0, float(self.a @ x) - self.b)


@dataclass
class Box(ConvexSet):
    """Coordinatewise bounds lo <= z <= hi (entries may be +-inf)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise InputError("box requires lo <= hi of equal shape")
        self.dim = self.lo.size

    def project(self, x, w):
        x, _ = _check_dims(self.dim, x, w)
        return np.clip(x, self.lo, self.hi)

    def residual(self, x):
        return float(np.linalg.norm(x - np.clip(x, self.lo, self.hi), ord=np.inf))


@dataclass
class Consensus(ConvexSet):
    """All d-dimensional sub-blocks equal. The weighted projection replaces
    every block by the per-coordinate weighted mean."""

    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise InputError("block dimension d must be >= 1")

    def _blocks(self, x):
        if x.size % self.d:
            raise InputError(f"dim {x.size} is not a multiple of d={self.d}")
        return x.reshape(-1, self.d)

    def project(self, x, w):
        x, w = _check_dims(None, x, w)
        xb = self._blocks(x)
        wb = w.reshape(xb.shape)
        mean = (wb * xb).sum(axis=0) / wb.sum(axis=0)
        return np.tile(mean, xb.shape[0])

    def residual(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        return float(np.linalg.norm(xb - xb.mean(axis=0), ord=np.inf)) if xb.size else 0.0


@dataclass(frozen=True)
class ConstraintBlock:
    """A convex set attached to one maximal clique."""

    clique_index: int
    set: ConvexSet
    dim: int  # |C_l| * d

    def __post_init__(self):
        if self.set.dim is not None and self.set.dim != self.dim:
            raise InputError(
                f"block for clique {self.clique_index}: set dim {self.set.dim} != {self.dim}"
            )


def project_weighted(cset: ConvexSet, x, norm_weights) -> np.ndarray:
    """Projection of x onto the set in the norm weighted by norm_weights."""
    return cset.project(x, norm_weights)


def numeric_projection_oracle(cset, x, norm_weights, tol=1e-10, max_iter=200_000):
    """Generic weighted projection used only to validate the closed forms.

    Minimizes 0.5 ||z - x||_W^2 by projected gradient with the set's exact
    unweighted projection; step 1/max(w) makes it a contraction.
    """
    x, w = _check_dims(cset.dim, x, norm_weights)
    ones = np.ones_like(x)
    step = 1.0 / w.max()
    z = cset.project(x, ones)
    for _ in range(max_iter):
        z_new = cset.project(z - step * w * (z - x), ones)
        if np.linalg.norm(z_new - z, ord=np.inf) <= tol * max(1.0, np.linalg.norm(z)):
            return z_new
        z = z_new
    raise OracleError(f"numeric projection oracle did not converge to tol {tol}")


_AFFINE_KINDS = (FullSpace, AffineEquality, SumEquality, Consensus)


def is_affine(cset: ConvexSet) -> bool:
    """True when the set's projection is an affine map of its argument."""
    return isinstance(cset, _AFFINE_KINDS)
