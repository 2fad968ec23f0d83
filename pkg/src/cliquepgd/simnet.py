"""Synchronous per-agent simulation of the clique-projected descent loop.

Each outer iteration: every agent takes its local gradient step, then p
lockstep communication rounds follow. In every round an agent broadcasts its
inner iterate to its graph neighbors, gathers theirs, and applies its row of
the clique-based projection by recomputing the projections of the cliques it
belongs to (every clique member recomputes the same projection; there is no
clique leader). Momentum for the accelerated variant is applied locally.

All per-agent arithmetic mirrors the centralized solver operation for
operation (same projection objects, same ascending clique order, division by
the clique count), so with a deterministic reduction order the distributed
trace is bit-identical to the centralized one.

Every read of another agent's state goes through an audited view; reads
outside the closed neighborhood of the communication graph are recorded as
violations (the simulation still completes, so broken topologies can be
studied).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .graph import Graph
from .problem import Problem
from .solver import SolverConfig, Trace, _Recorder, sigma_next


@dataclass
class RoundMessage:
    outer_k: int
    inner_s: int
    sender: int
    receiver: int
    payload: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {"outer_k": self.outer_k, "inner_s": self.inner_s,
             "sender": self.sender, "receiver": self.receiver,
             "payload": self.payload.tolist()},
            sort_keys=True,
        )


@dataclass
class AgentState:
    """Local memory of one agent: its own iterates plus the clique data it
    replicates (never the state of non-neighbors)."""

    id: int
    x: np.ndarray
    x_hat: np.ndarray
    x_prev: np.ndarray
    cliques: tuple[int, ...]
    clique_members: dict[int, tuple[int, ...]]
    clique_pos: dict[int, int]


class AuditLog:
    """Counts state reads by (reader, owner); flags non-neighbor reads."""

    def __init__(self, allowed: dict[int, frozenset]):
        self.allowed = allowed
        self.read_counts: dict[tuple[int, int], int] = {}
        self.violations: list[tuple[int, int]] = []

    def note(self, reader: int, owner: int):
        key = (reader, owner)
        self.read_counts[key] = self.read_counts.get(key, 0) + 1
        if owner != reader and owner not in self.allowed[reader]:
            self.violations.append(key)


class _RoundView:
    """Snapshot of round-s inner iterates served through the audit log."""

    def __init__(self, values: list[np.ndarray], audit: AuditLog):
        self._values = values
        self._audit = audit

    def get(self, reader: int, owner: int) -> np.ndarray:
        self._audit.note(reader, owner)
        return self._values[owner]


@dataclass
class DistributedRun:
    trace: Trace
    audit: AuditLog
    messages_per_outer: np.ndarray
    num_edges: int
    message_log: list[str] | None = None


@dataclass
class AuditReport:
    ok: bool
    violations: list[tuple[int, int]]
    read_counts: dict[tuple[int, int], int]


def locality_audit(run: DistributedRun) -> AuditReport:
    """Zero non-neighbor reads means the run respected the locality contract."""
    return AuditReport(
        ok=not run.audit.violations,
        violations=list(run.audit.violations),
        read_counts=dict(run.audit.read_counts),
    )


def run_distributed(problem: Problem, config: SolverConfig,
                    comm_graph: Graph | None = None,
                    log_messages: bool = False) -> DistributedRun:
    """Lockstep simulation of the plain or accelerated method.

    comm_graph overrides the communication topology (used to study corrupted
    setups where a clique outlives a removed edge); by default it is the
    problem graph.
    """
    if config.algorithm not in ("cpgd", "acpgd"):
        raise InputError(f"distributed run supports cpgd/acpgd, got {config.algorithm!r}")
    obj = problem.objective
    config.validate(obj)
    accelerated = config.algorithm == "acpgd"
    g = comm_graph if comm_graph is not None else problem.graph
    if g.n != problem.graph.n:
        raise InputError("communication graph has wrong node count")
    op = problem.operator()
    cover = problem.cover
    d = problem.d
    n = g.n
    allowed = {i: g.adj[i] | {i} for i in range(n)}

    if config.x0 is None:
        x0 = np.zeros(n * d)
    else:
        x0 = np.asarray(config.x0, dtype=float)
        if x0.shape != (n * d,):
            raise InputError(f"x0 has shape {x0.shape}, expected ({n * d},)")

    agents = []
    for i in range(n):
        xi = x0[i * d:(i + 1) * d].copy()
        agents.append(AgentState(
            id=i, x=xi, x_hat=xi.copy(), x_prev=xi.copy(),
            cliques=cover.membership[i],
            clique_members={l: cover.cliques[l] for l in cover.membership[i]},
            clique_pos={l: cover.local_rank[(l, i)] for l in cover.membership[i]},
        ))

    audit = AuditLog(allowed)
    t_fixed = config.schedule.t if config.schedule.is_fixed else None
    rec = _Recorder(obj, op, config, t_fixed)
    msg_counts = []
    log_lines = [] if log_messages else None
    sigma = 1.0

    for k in range(config.max_iters):
        lam = config.schedule.step(k + 1)
        inner = []
        for a in agents:
            base = a.x_hat if accelerated else a.x
            inner.append(base - lam * obj.grad_agent(a.id, base))
        sent_this_outer = 0
        for s in range(1, config.p + 1):
            # broadcast along communication edges only
            for a in agents:
                for j in sorted(g.adj[a.id]):
                    sent_this_outer += 1
                    if log_lines is not None:
                        log_lines.append(RoundMessage(
                            outer_k=k, inner_s=s, sender=a.id, receiver=j,
                            payload=inner[a.id]).to_json())
            view = _RoundView(inner, audit)
            nxt = []
            for a in agents:
                acc = np.zeros(d)
                for l in a.cliques:
                    members = a.clique_members[l]
                    parts = [inner[a.id] if j == a.id else view.get(a.id, j)
                             for j in members]
                    xc = np.concatenate(parts)
                    pc = op.project_clique(l, xc)
                    pos = a.clique_pos[l]
                    acc = acc + pc[pos * d:(pos + 1) * d]
                nxt.append(acc / float(len(a.cliques)))
            inner = nxt
        if accelerated:
            s_next = sigma_next(sigma)
            theta = (sigma - 1.0) / s_next
            for a in agents:
                a.x_prev = a.x
                a.x = inner[a.id]
                a.x_hat = a.x + theta * (a.x - a.x_prev)
            sigma = s_next
        else:
            for a in agents:
                a.x = inner[a.id]
        msg_counts.append(sent_this_outer)
        k1 = k + 1
        if k1 % config.record_every == 0 or k1 == config.max_iters:
            x_stacked = np.concatenate([a.x for a in agents])
            rec.add(k1, x_stacked)

    x_final = np.concatenate([a.x for a in agents])
    trace = rec.build(config.algorithm, config.p, config.schedule, x_final)
    return DistributedRun(
        trace=trace,
        audit=audit,
        messages_per_outer=np.asarray(msg_counts, dtype=int),
        num_edges=g.num_edges,
        message_log=log_lines,
    )
