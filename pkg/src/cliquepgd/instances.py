"""Seeded random problem instances for verification batteries.

Feasible witnesses come for free: block parameters are fitted around a point
sampled first (after propagating consensus equalities), so every generated
problem knows a member of its feasible set without any iterative solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import (AffineEquality, Ball, Box, Consensus,
                          Halfspace, SumEquality)
from .graph import Graph, build_graph, maximal_cliques
from .problem import Problem, QuadraticObjective

AFFINE_KINDS = ("sum_eq", "affine_eq", "consensus")
ALL_KINDS = AFFINE_KINDS + ("ball", "halfspace", "box", "none")


def random_er_graph(rng: np.random.Generator, n: int, p_edge: float) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p_edge]
    return build_graph(n, edges)


def bruteforce_maximal_cliques(g: Graph) -> set[tuple[int, ...]]:
    """Independent enumeration over all 2^n subsets using bit masks."""
    n = g.n
    masks = [0] * n
    for i in range(n):
        for j in g.adj[i]:
            masks[i] |= 1 << j
    complete = []
    for s in range(1, 1 << n):
        nodes = [i for i in range(n) if s >> i & 1]
        if all(s & ~(1 << i) & ~masks[i] == 0 for i in nodes):
            complete.append(s)
    comp_set = set(complete)
    out = set()
    for s in complete:
        if not any(t != s and t & s == s for t in comp_set):
            out.add(tuple(i for i in range(n) if s >> i & 1))
    return out


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        self.parent[self.find(i)] = self.find(j)


@dataclass
class RandomInstance:
    problem: Problem
    witness: np.ndarray  # a known feasible point


def random_blocks_with_witness(rng, cover, d, kinds=ALL_KINDS, constrain_prob=0.8):
    """Assign a random set to each clique and return (blocks, witness)."""
    n = len(cover.membership)
    choices = [str(rng.choice(kinds)) if rng.random() < constrain_prob else "none"
               for _ in range(cover.q)]
    # consensus equalities chain across overlapping cliques: propagate first
    uf = _UnionFind(n)
    for l, kind in enumerate(choices):
        if kind == "consensus":
            members = cover.cliques[l]
            for j in members[1:]:
                uf.union(members[0], j)
    z = rng.normal(0.0, 2.0, size=(n, d))
    for i in range(n):
        z[i] = z[uf.find(i)]
    z = z.ravel()
    blocks = {}
    for l, kind in enumerate(choices):
        members = np.asarray(cover.cliques[l], dtype=int)
        idx = (members[:, None] * d + np.arange(d)).ravel()
        zc = z[idx]
        dim = len(idx)
        if kind == "none":
            continue
        if kind == "sum_eq":
            blocks[l] = SumEquality(target=float(zc.sum()))
        elif kind == "affine_eq":
            m = int(rng.integers(1, min(3, dim) + 1))
            A = rng.normal(size=(m, dim))
            blocks[l] = AffineEquality(A=A, b=A @ zc)
        elif kind == "consensus":
            blocks[l] = Consensus(d=d)
        elif kind == "ball":
            center = zc + rng.normal(0.0, 1.0, size=dim)
            dist = float(np.linalg.norm(zc - center))
            blocks[l] = Ball(center=center, radius=dist * rng.uniform(1.1, 2.0) + 0.1)
        elif kind == "halfspace":
            a = rng.normal(size=dim)
            blocks[l] = Halfspace(a=a, b=float(a @ zc) + abs(rng.normal()) + 0.1)
        elif kind == "box":
            lo = zc - np.abs(rng.normal(0.5, 0.5, size=dim)) - 0.05
            hi = zc + np.abs(rng.normal(0.5, 0.5, size=dim)) + 0.05
            blocks[l] = Box(lo=lo, hi=hi)
    return blocks, z


def random_quadratic(rng, n, d, diagonal=False) -> QuadraticObjective:
    """Positive-definite separable quadratic with random block Hessians."""
    if diagonal or d == 1:
        diag = rng.uniform(0.5, 4.0, size=(n, d))
        Q = np.zeros((n, d, d))
        for i in range(n):
            np.fill_diagonal(Q[i], diag[i])
    else:
        Q = np.empty((n, d, d))
        for i in range(n):
            R = rng.normal(size=(d, d))
            Q[i] = R @ R.T + (0.3 + rng.random()) * np.eye(d)
    b = rng.normal(0.0, 3.0, size=(n, d))
    return QuadraticObjective(Q=Q, b=b)


def random_instance(rng, n_max=10, d_max=3, kinds=ALL_KINDS,
                    edge_probs=(0.2, 0.5, 0.8)) -> RandomInstance:
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    g = random_er_graph(rng, n, float(rng.choice(edge_probs)))
    cover = maximal_cliques(g)
    blocks, witness = random_blocks_with_witness(rng, cover, d, kinds=kinds)
    obj = random_quadratic(rng, n, d)
    problem = Problem(graph=g, cover=cover, objective=obj, blocks=blocks, d=d)
    return RandomInstance(problem=problem, witness=witness)


def random_equality_instance(rng, n_max=10, d_max=2) -> RandomInstance:
    """Affine-equality-only instance: the exact-solution oracle applies."""
    return random_instance(rng, n_max=n_max, d_max=d_max, kinds=AFFINE_KINDS)


def finite_diff_grad_V(op, x, h=1e-6) -> np.ndarray:
    """Central finite differences of the potential V.

    Only the cliques containing a coordinate contribute to its partial
    derivative, so each coordinate perturbs per-clique terms instead of
    re-evaluating the full V (same quantity, fewer projections).
    """
    x = np.asarray(x, dtype=float)

    def term(l, xc):
        r = xc - op.sets[l].project(xc, op.norm_weights(l))
        return 0.5 * float(np.dot(op.norm_weights(l) * r, r))

    grad = np.zeros_like(x)
    for l in range(op.cover.q):
        idx = op.indices(l)
        xc = x[idx]
        for pos in range(len(idx)):
            e = np.zeros(len(idx))
            e[pos] = h
            grad[idx[pos]] += (term(l, xc + e) - term(l, xc - e)) / (2 * h)
    return grad
