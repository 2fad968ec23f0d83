"""The clique-based projection operator and its potential function.

For a clique cover with weights gamma_i = 1/|cliques containing i|, the
operator maps a stacked vector x in R^{nd} to

    T(x)_i = (1/|clq_i|) * sum over cliques l containing i of the i-block of
             the weighted projection of x restricted to clique l,

each per-clique projection taken in the norm weighted by gamma restricted to
the clique. T equals the ordinary projection when the graph is complete, and
x - T(x) is the exact gradient of the potential

    V(x) = 0.5 * sum_l || x_Cl - P_l(x_Cl) ||^2_{diag(gamma_Cl)}.

Per-clique contributions are always accumulated in ascending clique order so
that a lockstep per-agent simulation reproduces the same floating-point sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConvexSet, FullSpace, is_affine
from .errors import InputError
from .graph import CliqueCover


@dataclass
class CliqueOperator:
    """Clique-based projection bound to a cover, per-clique sets, and d.

    Cliques without a real constraint carry FullSpace so that the average in
    T is always over all cliques containing a node, keeping the 1/|clq_i|
    weighting intact.
    """

    cover: CliqueCover
    blocks: dict[int, ConvexSet]
    d: int = 1
    _idx: list = field(init=False, repr=False)
    _w: list = field(init=False, repr=False)
    _sets: list = field(init=False, repr=False)
    _counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise InputError("per-agent dimension d must be >= 1")
        n = len(self.cover.membership)
        q = self.cover.q
        for l in self.blocks:
            if not 0 <= l < q:
                raise InputError(f"block references unknown clique {l}")
        self._sets = [self.blocks.get(l, FullSpace()) for l in range(q)]
        self._idx = []
        self._w = []
        for l, members in enumerate(self.cover.cliques):
            m = np.asarray(members, dtype=int)
            idx = (m[:, None] * self.d + np.arange(self.d)).ravel()
            self._idx.append(idx)
            w = np.repeat(self.cover.weights[m], self.d)
            self._w.append(w)
            dim = len(members) * self.d
            sdim = self._sets[l].dim
            if sdim is not None and sdim != dim:
                raise InputError(
                    f"block for clique {l} has dim {sdim}, clique needs {dim}"
                )
        counts = np.array([len(m) for m in self.cover.membership], dtype=float)
        self._counts = np.repeat(counts, self.d)

    @property
    def n(self) -> int:
        return len(self.cover.membership)

    @property
    def dim(self) -> int:
        return self.n * self.d

    @property
    def sets(self) -> list:
        """Per-clique constraint sets in canonical clique order."""
        return self._sets

    def indices(self, l: int) -> np.ndarray:
        """Positions of clique l's coordinates inside the stacked vector."""
        return self._idx[l]

    def norm_weights(self, l: int) -> np.ndarray:
        """Projection weights for clique l (per-node gamma repeated d times)."""
        return self._w[l]

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InputError(f"expected vector of dim {self.dim}, got {x.shape}")
        return x

    def project_clique(self, l: int, x_c: np.ndarray) -> np.ndarray:
        """Weighted projection of a clique-restricted vector onto block l."""
        return self._sets[l].project(x_c, self._w[l])

    def apply_T(self, x) -> np.ndarray:
        x = self._check(x)
        acc = np.zeros_like(x)
        for l, idx in enumerate(self._idx):
            acc[idx] += self._sets[l].project(x[idx], self._w[l])
        # divide (not multiply by reciprocal) so a per-agent lockstep
        # simulation summing the same terms reproduces identical bits
        return acc / self._counts

    def apply_T_power(self, x, p: int) -> np.ndarray:
        if p < 1:
            raise InputError(f"projection count p must be >= 1, got {p}")
        y = self._check(x)
        for _ in range(p):
            y = self.apply_T(y)
        return y

    def eval_V(self, x) -> float:
        x = self._check(x)
        total = 0.0
        for l, idx in enumerate(self._idx):
            r = x[idx] - self._sets[l].project(x[idx], self._w[l])
            total += np.dot(self._w[l] * r, r)
        return 0.5 * total

    def grad_V(self, x) -> np.ndarray:
        x = self._check(x)
        return x - self.apply_T(x)

    def max_block_residual(self, x) -> float:
        x = self._check(x)
        return max(self._sets[l].residual(x[idx]) for l, idx in enumerate(self._idx))

    def feasible(self, x, tol: float = 1e-10) -> bool:
        return self.max_block_residual(x) <= tol

    def all_affine(self) -> bool:
        return all(is_affine(s) for s in self._sets)

    def as_affine(self):
        """Exact (M, c) with T(x) = M x + c, available when every block's
        projection is affine. Built column-by-column from the closed forms."""
        if not self.all_affine():
            return None
        nd = self.dim
        c = self.apply_T(np.zeros(nd))
        M = np.empty((nd, nd))
        e = np.zeros(nd)
        for j in range(nd):
            e[j] = 1.0
            M[:, j] = self.apply_T(e) - c
            e[j] = 0.0
        return M, c


def eval_J(op: CliqueOperator, objective, x, t: float) -> float:
    """Merit value f(x) + V(x)/t for a fixed step size t > 0."""
    if t <= 0:
        raise InputError(f"step t must be positive, got {t}")
    return objective.value(np.asarray(x, dtype=float)) + op.eval_V(x) / t


# functional aliases for callers that prefer free functions

def apply_T(op: CliqueOperator, x):
    return op.apply_T(x)


def apply_T_power(op: CliqueOperator, x, p: int):
    return op.apply_T_power(x, p)


def eval_V(op: CliqueOperator, x) -> float:
    return op.eval_V(x)


def grad_V(op: CliqueOperator, x):
    return op.grad_V(x)
