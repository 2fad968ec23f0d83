import json

import numpy as np
import pytest

from cliquepgd import (Consensus, FixedStep, InputError, InvKStep,
                       Problem, QuadraticObjective, SolverConfig, SumEquality,
                       build_graph, locality_audit, maximal_cliques,
                       run_acpgd, run_cpgd, run_distributed)
from cliquepgd.bench import generate_allocation_problem
from cliquepgd.instances import random_instance


def test_distributed_matches_centralized_bitwise():
    prob = generate_allocation_problem(1)
    op = prob.operator()
    for algo, sched in (("cpgd", InvKStep(1.0)), ("acpgd", FixedStep(0.001))):
        for p in (1, 4):
            cfg = SolverConfig(algorithm=algo, p=p, schedule=sched,
                               max_iters=25, record_iterates=True)
            central = (run_cpgd if algo == "cpgd" else run_acpgd)(prob, op, cfg)
            dist = run_distributed(prob, SolverConfig(
                algorithm=algo, p=p, schedule=sched, max_iters=25,
                record_iterates=True))
            assert np.array_equal(central.x_hist, dist.trace.x_hist)
            assert np.array_equal(central.f, dist.trace.f)


def test_distributed_matches_on_nonaffine_blocks():
    rng = np.random.default_rng(21)
    inst = random_instance(rng, n_max=6, d_max=2, kinds=("ball", "box", "sum_eq"))
    prob = inst.problem
    cfg = SolverConfig(algorithm="cpgd", p=3,
                       schedule=FixedStep(1.0 / prob.objective.L),
                       max_iters=20, record_iterates=True)
    central = run_cpgd(prob, config=cfg)
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=3, schedule=FixedStep(1.0 / prob.objective.L),
        max_iters=20, record_iterates=True))
    assert np.max(np.abs(central.x_hist - dist.trace.x_hist)) <= 1e-12


def test_message_counts_and_audit():
    prob = generate_allocation_problem(0)
    p = 3
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=p, schedule=InvKStep(1.0), max_iters=10))
    assert np.all(dist.messages_per_outer == p * 2 * prob.graph.num_edges)
    report = locality_audit(dist)
    assert report.ok
    assert not report.violations
    n = prob.graph.n
    closed = {i: prob.graph.adj[i] | {i} for i in range(n)}
    for (reader, owner) in report.read_counts:
        assert owner in closed[reader]


def test_corrupted_topology_is_flagged():
    # drop one edge from the communication graph but keep the clique blocks
    prob = generate_allocation_problem(0)
    edges = [e for e in prob.graph.edges if e != (0, 1)]
    broken = build_graph(prob.graph.n, edges)
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=2, schedule=InvKStep(1.0), max_iters=3),
        comm_graph=broken)
    report = locality_audit(dist)
    assert not report.ok
    assert (0, 1) in report.violations or (1, 0) in report.violations
    # complete graph permits every pair
    full = build_graph(3, [(0, 1), (0, 2), (1, 2)])
    cover = maximal_cliques(full)
    obj = QuadraticObjective.least_squares(np.arange(3.0))
    prob2 = Problem(graph=full, cover=cover, objective=obj,
                    blocks={0: SumEquality(target=1.0)}, d=1)
    rep2 = locality_audit(run_distributed(prob2, SolverConfig(
        algorithm="cpgd", p=2, schedule=InvKStep(1.0), max_iters=3)))
    assert rep2.ok


def test_single_agent_no_edges_is_gradient_descent():
    g = build_graph(1, [])
    cover = maximal_cliques(g)
    obj = QuadraticObjective.least_squares(np.array([4.0]))
    prob = Problem(graph=g, cover=cover, objective=obj, blocks={}, d=1)
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=2, schedule=FixedStep(0.5), max_iters=20,
        record_iterates=True))
    x = 0.0
    for i in range(20):
        x = x - 0.5 * (x - 4.0)
        assert dist.trace.x_hist[i][0] == pytest.approx(x, abs=1e-15)
    assert np.all(dist.messages_per_outer == 0)


def test_two_agents_reach_weighted_consensus():
    g = build_graph(2, [(0, 1)])
    cover = maximal_cliques(g)
    obj = QuadraticObjective.least_squares(np.array([0.0, 3.0]))
    prob = Problem(graph=g, cover=cover, blocks={0: Consensus(d=1)},
                   objective=obj, d=1)
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=60, schedule=FixedStep(1.0), max_iters=1,
        record_iterates=True))
    x1 = dist.trace.x_hist[0]
    # gradient step lands on (0, 3); uniform weights give the plain mean
    assert abs(x1[0] - x1[1]) < 1e-6
    assert x1[0] == pytest.approx(1.5, abs=1e-6)


def test_message_log_schema():
    prob = generate_allocation_problem(0)
    dist = run_distributed(prob, SolverConfig(
        algorithm="cpgd", p=2, schedule=InvKStep(1.0), max_iters=2),
        log_messages=True)
    assert len(dist.message_log) == 2 * 2 * 2 * prob.graph.num_edges
    entry = json.loads(dist.message_log[0])
    assert set(entry) == {"outer_k", "inner_s", "sender", "receiver", "payload"}


def test_distributed_rejects_pgd():
    prob = generate_allocation_problem(0)
    with pytest.raises(InputError):
        run_distributed(prob, SolverConfig(algorithm="pgd", max_iters=2))
    with pytest.raises(InputError):
        run_distributed(prob, SolverConfig(algorithm="cpgd", max_iters=2),
                        comm_graph=build_graph(3, []))
