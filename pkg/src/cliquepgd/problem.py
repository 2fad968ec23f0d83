"""Separable objectives and the bundled problem description.

An objective is a sum of per-agent terms f_i over R^d with a known gradient
and a smoothness constant L. Quadratic objectives carry their block Hessians
so L can be computed exactly; generic callables must supply L and are
validated against finite differences at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, UnsupportedError
from .graph import CliqueCover, Graph
from .projection import CliqueOperator


class SeparableObjective:
    """f(x) = sum_i f_i(x_i) with x stacked agent-wise, each x_i in R^d."""

    n: int
    d: int
    L: float
    mu: float | None

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def value_agent(self, i: int, xi) -> float:
        raise NotImplementedError

    def grad_agent(self, i: int, xi) -> np.ndarray:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.n * self.d


@dataclass
class QuadraticObjective(SeparableObjective):
    """Per-agent terms 0.5 x_i^T Q_i x_i + b_i^T x_i + c_i with SPD-or-PSD
    blocks stacked as Q (n, d, d), b (n, d)."""

    Q: np.ndarray
    b: np.ndarray
    c: float = 0.0
    mu: float | None = None

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.Q.ndim != 3 or self.Q.shape[1] != self.Q.shape[2]:
            raise InputError("Q must have shape (n, d, d)")
        if self.b.shape != self.Q.shape[:2]:
            raise InputError("b must have shape (n, d)")
        if not np.allclose(self.Q, np.transpose(self.Q, (0, 2, 1))):
            raise InputError("Hessian blocks must be symmetric")
        self.n, self.d = self.b.shape
        eigs = np.linalg.eigvalsh(self.Q)
        self.L = float(eigs.max())
        if self.L <= 0:
            raise InputError("objective must have positive curvature somewhere")
        emin = float(eigs.min())
        if emin < -1e-12 * self.L:
            raise InputError("Hessian blocks must be positive semidefinite")
        if self.mu is None and emin > 0:
            self.mu = emin

    @classmethod
    def least_squares(cls, targets, d: int = 1):
        """0.5 * sum_i ||x_i - a_i||^2 for stacked targets a (n*d,)."""
        a = np.asarray(targets, dtype=float).reshape(-1, d)
        n = a.shape[0]
        Q = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        return cls(Q=Q, b=-a, c=0.5 * float(np.sum(a * a)))

    def _blocks(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n * self.d,):
            raise InputError(f"expected dim {self.n * self.d}, got {x.shape}")
        return x.reshape(self.n, self.d)

    def value(self, x) -> float:
        xb = self._blocks(x)
        qx = np.einsum("nij,nj->ni", self.Q, xb)
        return float(0.5 * np.sum(xb * qx) + np.sum(self.b * xb) + self.c)

    def grad(self, x) -> np.ndarray:
        xb = self._blocks(x)
        return (np.einsum("nij,nj->ni", self.Q, xb) + self.b).ravel()

    def value_agent(self, i, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return float(0.5 * xi @ self.Q[i] @ xi + self.b[i] @ xi)

    def grad_agent(self, i, xi) -> np.ndarray:
        return self.Q[i] @ np.asarray(xi, dtype=float) + self.b[i]


@dataclass
class CallableObjective(SeparableObjective):
    """Objective assembled from per-agent (value, grad) callables.

    Gradients are validated against central finite differences at a few
    probe points when `validate=True` (the default).
    """

    values: list
    grads: list
    d: int
    L: float
    mu: float | None = None
    validate: bool = True

    def __post_init__(self):
        self.n = len(self.values)
        if len(self.grads) != self.n:
            raise InputError("need one gradient per agent term")
        if self.L <= 0:
            raise InputError("smoothness constant L must be positive")
        if self.validate:
            self._validate_gradients()

    def _validate_gradients(self, tol=1e-5):
        rng = np.random.default_rng(20240817)
        h = 1e-6
        for i in range(self.n):
            for _ in range(3):
                xi = rng.standard_normal(self.d)
                g = np.asarray(self.grads[i](xi), dtype=float)
                fd = np.empty(self.d)
                for j in range(self.d):
                    e = np.zeros(self.d)
                    e[j] = h
                    fd[j] = (self.values[i](xi + e) - self.values[i](xi - e)) / (2 * h)
                if np.linalg.norm(g - fd) > tol * (1.0 + np.linalg.norm(g)):
                    raise InputError(f"gradient of agent {i} disagrees with finite differences")

    def value(self, x) -> float:
        xb = np.asarray(x, dtype=float).reshape(self.n, self.d)
        return float(sum(self.values[i](xb[i]) for i in range(self.n)))

    def grad(self, x) -> np.ndarray:
        xb = np.asarray(x, dtype=float).reshape(self.n, self.d)
        return np.concatenate([np.asarray(self.grads[i](xb[i]), dtype=float) for i in range(self.n)])

    def value_agent(self, i, xi) -> float:
        return float(self.values[i](np.asarray(xi, dtype=float)))

    def grad_agent(self, i, xi) -> np.ndarray:
        return np.asarray(self.grads[i](np.asarray(xi, dtype=float)), dtype=float)


def quadratic_L(objective) -> float:
    """Largest Hessian-block eigenvalue of a quadratic separable objective."""
    if not isinstance(objective, QuadraticObjective):
        raise UnsupportedError("L can only be computed for quadratic objectives; supply L")
    return float(np.linalg.eigvalsh(objective.Q).max())


@dataclass
class Problem:
    """Graph, clique cover, per-clique constraint sets, and objective."""

    graph: Graph
    cover: CliqueCover
    objective: SeparableObjective
    blocks: dict[int, object]
    d: int = 1
    _op: CliqueOperator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.objective.d != self.d:
            raise InputError("objective block dimension disagrees with problem d")
        if self.objective.n != self.graph.n:
            raise InputError("objective has wrong number of agent terms")

    def operator(self) -> CliqueOperator:
        if self._op is None:
            self._op = CliqueOperator(cover=self.cover, blocks=self.blocks, d=self.d)
        return self._op

    @property
    def dim(self) -> int:
        return self.graph.n * self.d
