"""Ground-truth providers: exact KKT solutions for equality-constrained
quadratics and Dykstra's alternating projections for the full feasible set.

Dykstra (not plain alternating projections) is required because repeated
clique projections converge to *some* feasible point, not to the nearest
one; the projected-gradient baseline needs the true projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .constraints import AffineEquality, Consensus, FullSpace, SumEquality
from .errors import InfeasibleSetError, NumericError, OracleError, UnsupportedError
from .problem import Problem, QuadraticObjective
from .projection import CliqueOperator
from .solver import FixedStep, SolverConfig, run_acpgd


def stacked_equality_system(op: CliqueOperator):
    """Stack all affine-equality-type blocks into one system E x = r over the
    full vector. Supports affine/sum equalities and consensus blocks."""
    rows = []
    rhs = []
    nd = op.dim
    d = op.d
    for l, members in enumerate(op.cover.cliques):
        cset = op.sets[l]
        idx = op.indices(l)
        if isinstance(cset, FullSpace):
            continue
        if isinstance(cset, SumEquality):
            row = np.zeros(nd)
            row[idx] = 1.0
            rows.append(row)
            rhs.append(cset.target)
        elif isinstance(cset, AffineEquality):
            for a_row, b_val in zip(cset.A, cset.b):
                row = np.zeros(nd)
                row[idx] = a_row
                rows.append(row)
                rhs.append(b_val)
        elif isinstance(cset, Consensus):
            m = len(members)
            for jj in range(m - 1):
                for tt in range(d):
                    row = np.zeros(nd)
                    row[idx[jj * d + tt]] = 1.0
                    row[idx[(jj + 1) * d + tt]] = -1.0
                    rows.append(row)
                    rhs.append(0.0)
        else:
            raise UnsupportedError(
                f"clique {l} carries a non-affine set {type(cset).__name__}"
            )
    if not rows:
        return np.zeros((0, nd)), np.zeros(0)
    return np.asarray(rows), np.asarray(rhs)


def project_stacked_equality(E, r, x):
    """Euclidean projection onto {x : E x = r} via a minimum-norm correction;
    tolerant of redundant (consistent) rows."""
    x = np.asarray(x, dtype=float)
    if E.shape[0] == 0:
        return x.copy()
    lam, *_ = np.linalg.lstsq(E @ E.T, E @ x - r, rcond=None)
    return x - E.T @ lam


@dataclass
class KktSolution:
    xstar: np.ndarray
    fstar: float
    multipliers: np.ndarray
    primal_residual: float
    stationarity_residual: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "xstar": self.xstar.tolist(),
                "fstar": self.fstar,
                "multipliers": self.multipliers.tolist(),
                "primal_residual": self.primal_residual,
                "stationarity_residual": self.stationarity_residual,
            },
            sort_keys=True,
        )


def solve_equality_qp(problem: Problem) -> KktSolution:
    """Exact minimizer of a positive-definite separable quadratic subject to
    the stacked affine-equality constraints of all blocks."""
    obj = problem.objective
    if not isinstance(obj, QuadraticObjective):
        raise UnsupportedError("exact solutions require a quadratic objective")
    eigs = np.linalg.eigvalsh(obj.Q)
    if eigs.min() <= 0:
        raise UnsupportedError("Hessian blocks must be positive definite")
    op = problem.operator()
    E, r = stacked_equality_system(op)
    nd = problem.dim
    m = E.shape[0]
    H = np.zeros((nd, nd))
    d = problem.d
    for i in range(obj.n):
        H[i * d:(i + 1) * d, i * d:(i + 1) * d] = obj.Q[i]
    blin = obj.b.ravel()
    kkt = np.zeros((nd + m, nd + m))
    kkt[:nd, :nd] = H
    kkt[:nd, nd:] = E.T
    kkt[nd:, :nd] = E
    vec = np.concatenate([-blin, r])
    sol, *_ = np.linalg.lstsq(kkt, vec, rcond=None)
    x = sol[:nd]
    nu = sol[nd:]
    primal = float(np.linalg.norm(E @ x - r, ord=np.inf)) if m else 0.0
    stat = float(np.linalg.norm(H @ x + blin + E.T @ nu, ord=np.inf))
    scale = 1.0 + float(np.linalg.norm(r, ord=np.inf)) if m else 1.0
    if primal > 1e-8 * scale:
        raise InfeasibleSetError(f"stacked constraints inconsistent (residual {primal:.3e})")
    if stat > 1e-8 * (1.0 + np.linalg.norm(blin, ord=np.inf)):
        raise NumericError(f"KKT stationarity residual too large ({stat:.3e})")
    return KktSolution(
        xstar=x,
        fstar=float(obj.value(x)),
        multipliers=nu,
        primal_residual=primal,
        stationarity_residual=stat,
    )


def project_D_dykstra(op: CliqueOperator, x, tol: float = 1e-12, max_cycles: int = 100_000):
    """Dykstra's algorithm over the lifted per-clique sets, in the plain
    Euclidean norm. Returns the projection of x onto the intersection."""
    x = np.asarray(x, dtype=float).copy()
    q = op.cover.q
    ones = [np.ones(len(op.indices(l))) for l in range(q)]
    corr = [np.zeros(len(op.indices(l))) for l in range(q)]
    for _ in range(max_cycles):
        x_prev = x.copy()
        for l in range(q):
            idx = op.indices(l)
            v = x[idx] + corr[l]
            y = op.sets[l].project(v, ones[l])
            corr[l] = v - y
            x[idx] = y
        change = np.linalg.norm(x - x_prev, ord=np.inf)
        # the per-cycle change can undershoot the true error on badly
        # angled intersections, so require feasibility as well
        if change <= tol and op.max_block_residual(x) <= 10 * tol:
            return x
        if change == 0.0:
            raise OracleError(
                f"Dykstra stagnated with block residual "
                f"{op.max_block_residual(x):.3e} > {10 * tol:.0e}"
            )
    raise OracleError(
        f"Dykstra did not converge in {max_cycles} cycles "
        f"(block residual {op.max_block_residual(x):.3e})"
    )


def dykstra_projector(op: CliqueOperator, tol: float = 1e-12, max_cycles: int = 100_000):
    return lambda v: project_D_dykstra(op, v, tol=tol, max_cycles=max_cycles)


def approximate_fstar(problem: Problem, iters: int = 1_000_000, p: int = 50):
    """Fallback optimal value for non-quadratic objectives: long accelerated
    run, then evaluate f at the Dykstra projection of the final iterate.
    Returns (fstar, 'approximate')."""
    op = problem.operator()
    t = 1.0 / problem.objective.L
    cfg = SolverConfig(algorithm="acpgd", p=p, schedule=FixedStep(t),
                       max_iters=iters, record_every=max(1, iters // 100))
    trace = run_acpgd(problem, op, cfg)
    xf = project_D_dykstra(op, trace.x_final, tol=1e-10)
    return float(problem.objective.value(xf)), "approximate"
