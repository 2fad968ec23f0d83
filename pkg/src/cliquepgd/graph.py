"""Undirected graphs, maximal-clique enumeration, and clique indexing.

Node indices are 0-based throughout the library; the 1-based convention of
JSON configs and CLI output is converted at the I/O boundary (see bench/cli).

A clique cover records, for every node i, the set of maximal cliques that
contain it together with the node's position inside each clique and the
averaging weight 1 / (number of cliques containing i). The closed
neighborhood of a node always equals the union of its maximal cliques, which
is what makes per-clique projections implementable with neighbor-only
communication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceLimitError

DEFAULT_CLIQUE_CAP = 100_000


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 0..n-1 with set-based adjacency."""

    n: int
    adj: tuple[frozenset[int], ...]  # adj[i] excludes i itself

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of undirected edges as (i, j) pairs with i < j."""
        return sorted((i, j) for i in range(self.n) for j in self.adj[i] if i < j)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def is_complete(self) -> bool:
        return all(len(self.adj[i]) == self.n - 1 for i in range(self.n))


def build_graph(n, edges) -> Graph:
    """Build an undirected graph from an edge list.

    Duplicate edges and reversed duplicates are merged. Self-loops and
    out-of-range indices raise InputError.
    """
    if n < 1:
        raise InputError(f"graph needs at least one node, got n={n}")
    adj = [set() for _ in range(n)]
    for i, j in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"edge ({i},{j}) out of range for n={n}")
        if i == j:
            raise InputError(f"self-loop ({i},{i}) is not allowed")
        adj[i].add(j)
        adj[j].add(i)
    return Graph(n=n, adj=tuple(frozenset(a) for a in adj))


def neighbors(g: Graph, i: int) -> frozenset[int]:
    """Closed neighborhood of node i: its adjacent nodes plus i itself."""
    if not 0 <= i < g.n:
        raise InputError(f"node {i} out of range for n={g.n}")
    return g.adj[i] | {i}


def _bron_kerbosch_pivot(adj, cap):
    """Enumerate maximal cliques with pivoting on the vertex of largest
    candidate degree. Returns a list of frozensets."""
    out = []

    def expand(r, p, x):
        if not p and not x:
            out.append(frozenset(r))
            if len(out) > cap:
                raise ResourceLimitError(
                    f"maximal clique count exceeded cap {cap}"
                )
            return
        pivot = max(p | x, key=lambda u: len(p & adj[u]))
        for v in list(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(frozenset(), frozenset(range(len(adj))), frozenset())
    return out


@dataclass(frozen=True)
class CliqueCover:
    """Maximal cliques of a graph plus all per-node indexing machinery.

    cliques     : tuple of strictly increasing node tuples, sorted
                  lexicographically (the canonical order).
    membership  : membership[i] = sorted tuple of clique indices containing i.
    local_rank  : (l, i) -> position of node i inside cliques[l] (0-based).
    weights     : weights[i] = 1 / len(membership[i]).
    """

    cliques: tuple[tuple[int, ...], ...]
    membership: tuple[tuple[int, ...], ...]
    local_rank: dict[tuple[int, int], int]
    weights: np.ndarray

    @property
    def q(self) -> int:
        return len(self.cliques)


def maximal_cliques(g: Graph, cap: int = DEFAULT_CLIQUE_CAP) -> CliqueCover:
    """Enumerate all maximal cliques of g and build the clique cover.

    Cliques are emitted in a deterministic canonical order: each clique
    sorted ascending, the clique list sorted lexicographically. An isolated
    node forms the singleton maximal clique {i}.
    """
    if g.n < 1:
        raise InputError("graph is empty")
    raw = _bron_kerbosch_pivot(g.adj, cap)
    cliques = tuple(sorted(tuple(sorted(c)) for c in raw))
    membership = [[] for _ in range(g.n)]
    local_rank = {}
    for l, c in enumerate(cliques):
        for pos, i in enumerate(c):
            membership[i].append(l)
            local_rank[(l, i)] = pos
    weights = np.array([1.0 / len(m) for m in membership])
    return CliqueCover(
        cliques=cliques,
        membership=tuple(tuple(m) for m in membership),
        local_rank=local_rank,
        weights=weights,
    )


def verify_neighbor_clique_identity(g: Graph, cover: CliqueCover) -> bool:
    """Check that every closed neighborhood equals the union of the maximal
    cliques containing the node."""
    for i in range(g.n):
        union = set()
        for l in cover.membership[i]:
            union.update(cover.cliques[l])
        if union != set(neighbors(g, i)):
            return False
    return True


def graph_from_cliques(n: int, cliques) -> Graph:
    """Union of complete subgraphs on the given node sets."""
    edges = []
    for c in cliques:
        c = sorted(set(int(v) for v in c))
        for ai in range(len(c)):
            for bi in range(ai + 1, len(c)):
                edges.append((c[ai], c[bi]))
    return build_graph(n, edges)
