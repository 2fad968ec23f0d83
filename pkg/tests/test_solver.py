import numpy as np
import pytest

from cliquepgd import (CallableObjective, FixedStep, InputError, InvKStep,
                       InvSqrtKStep, Problem, QuadraticObjective, SolverConfig,
                       SumEquality, UnsupportedError, build_graph,
                       check_rate_bound, compute_hk_diagnostic, maximal_cliques,
                       parse_schedule, quadratic_L, run_acpgd, run_cpgd,
                       run_pgd, sigma_next, sigma_sequence, solve_equality_qp)
from cliquepgd.instances import random_equality_instance


def small_problem(seed=0, n=6):
    rng = np.random.default_rng(seed)
    g = build_graph(n, [(i, i + 1) for i in range(n - 1)])
    cover = maximal_cliques(g)
    blocks = {l: SumEquality(target=float(rng.normal())) for l in range(cover.q)}
    obj = QuadraticObjective.least_squares(rng.uniform(0, 10, n))
    return Problem(graph=g, cover=cover, objective=obj, blocks=blocks, d=1)


def test_parse_schedule():
    assert parse_schedule("fixed:0.5") == FixedStep(0.5)
    assert parse_schedule("invk:2") == InvKStep(2.0)
    assert parse_schedule("invsqrtk:1") == InvSqrtKStep(1.0)
    assert parse_schedule("invk:2").step(4) == 0.5
    assert parse_schedule("invsqrtk:2").step(4) == 1.0
    for bad in ("fixed:-1", "linear:1", "fixed:zz"):
        with pytest.raises(InputError):
            parse_schedule(bad)


def test_sigma_recursion():
    s = sigma_sequence(60)
    assert s[0] == 1.0
    assert s[1] == pytest.approx((1 + np.sqrt(5)) / 2, abs=1e-12)
    assert s[2] == pytest.approx(sigma_next(s[1]), abs=0)
    assert s[2] == pytest.approx(2.1935271, abs=1e-6)
    ks = np.arange(61)
    assert np.all(s >= (ks + 1) / 2)


def test_first_accelerated_step_has_no_momentum():
    # theta_0 = (sigma_0 - 1)/sigma_1 = 0, so x(1) agrees with the plain run
    prob = small_problem()
    t = 1.0 / prob.objective.L
    cfg = lambda algo: SolverConfig(algorithm=algo, p=2, schedule=FixedStep(t),
                                    max_iters=1)
    xc = run_cpgd(prob, config=cfg("cpgd")).x_final
    xa = run_acpgd(prob, config=cfg("acpgd")).x_final
    assert np.array_equal(xc, xa)


def test_zero_gradient_feasible_start_is_stationary():
    g = build_graph(2, [(0, 1)])
    cover = maximal_cliques(g)
    blocks = {0: SumEquality(target=3.0)}
    zero = lambda xi: 0.0
    zgrad = lambda xi: np.zeros(1)
    obj = CallableObjective(values=[zero, zero], grads=[zgrad, zgrad], d=1, L=1.0)
    prob = Problem(graph=g, cover=cover, objective=obj, blocks=blocks, d=1)
    x0 = np.array([1.0, 2.0])
    cfg = SolverConfig(algorithm="cpgd", p=3, schedule=InvKStep(1.0),
                       max_iters=20, x0=x0, record_iterates=True)
    trace = run_cpgd(prob, config=cfg)
    assert np.allclose(trace.x_hist, x0, atol=1e-14)


def test_config_validation():
    prob = small_problem()
    with pytest.raises(InputError):
        run_cpgd(prob, config=SolverConfig(algorithm="cpgd",
                                           schedule=FixedStep(2.0)))  # > 1/L
    with pytest.raises(InputError):
        run_acpgd(prob, config=SolverConfig(algorithm="acpgd",
                                            schedule=InvKStep(1.0)))
    with pytest.raises(InputError):
        run_cpgd(prob, config=SolverConfig(algorithm="cpgd", p=0))
    with pytest.raises(InputError):
        run_cpgd(prob, config=SolverConfig(algorithm="acpgd"))
    with pytest.raises(InputError):
        run_cpgd(prob, config=SolverConfig(algorithm="cpgd", max_iters=10,
                                           x0=np.zeros(3)))


def test_quadratic_L():
    assert quadratic_L(QuadraticObjective.least_squares(np.zeros(4))) == 1.0
    Q = np.zeros((3, 2, 2))
    for i, eig in enumerate((1.0, 2.0, 3.0)):
        Q[i] = np.diag([eig, 0.5])
    obj = QuadraticObjective(Q=Q, b=np.zeros((3, 2)))
    assert quadratic_L(obj) == 3.0
    Q5 = np.zeros((2, 2, 2))
    Q5[0] = np.diag([5.0, 1.0])
    Q5[1] = np.eye(2)
    assert quadratic_L(QuadraticObjective(Q=Q5, b=np.zeros((2, 2)))) == 5.0
    zero = lambda xi: 0.0
    zgrad = lambda xi: np.zeros(1)
    with pytest.raises(UnsupportedError):
        quadratic_L(CallableObjective(values=[zero], grads=[zgrad], d=1, L=1.0))


def test_gradient_validation_catches_wrong_gradient():
    bad_grad = lambda xi: xi + 1.0  # not the gradient of 0.5*||x||^2
    good_val = lambda xi: 0.5 * float(xi @ xi)
    with pytest.raises(InputError):
        CallableObjective(values=[good_val], grads=[bad_grad], d=2, L=1.0)


def test_traces_are_deterministic():
    prob = small_problem(3)
    cfg = SolverConfig(algorithm="cpgd", p=2, schedule=InvKStep(1.0),
                       max_iters=50, record_iterates=True)
    t1 = run_cpgd(prob, config=cfg)
    t2 = run_cpgd(prob, config=cfg)
    assert np.array_equal(t1.x_hist, t2.x_hist)
    assert np.array_equal(t1.f, t2.f)
    assert np.array_equal(t1.V, t2.V)


def test_rate_bounds_small_battery():
    for trial in range(5):
        rng = np.random.default_rng(50 + trial)
        inst = random_equality_instance(rng, n_max=8, d_max=2)
        sol = solve_equality_qp(inst.problem)
        t = 1.0 / inst.problem.objective.L
        cfg = SolverConfig(algorithm="cpgd", p=1, schedule=FixedStep(t),
                           max_iters=300, diagnostics_hk=True)
        tr = run_cpgd(inst.problem, config=cfg)
        ok, excess = check_rate_bound(tr, np.zeros(inst.problem.dim),
                                      sol.xstar, sol.fstar, t)
        assert ok, excess
        cfa = SolverConfig(algorithm="acpgd", p=1, schedule=FixedStep(t),
                           max_iters=300)
        tra = run_acpgd(inst.problem, config=cfa)
        ok, excess = check_rate_bound(tra, np.zeros(inst.problem.dim),
                                      sol.xstar, sol.fstar, t, accelerated=True)
        assert ok, excess
        # the merit surrogate is monotone and sits above f + V/t
        assert np.max(np.diff(tr.Hk)) <= 1e-9
        assert np.max(tr.f + tr.V / t - tr.Hk) <= 1e-9


def test_hk_diagnostic_at_feasible_fixed_point():
    prob = small_problem(4)
    sol = solve_equality_qp(prob)
    op = prob.operator()
    # y_prev = x_k feasible: V and the residual vanish, H_k = f(x_k)
    h = compute_hk_diagnostic(prob.objective, op, 0.5, sol.xstar, sol.xstar)
    assert h == pytest.approx(prob.objective.value(sol.xstar), abs=1e-9)
    with pytest.raises(InputError):
        compute_hk_diagnostic(prob.objective, op, 0.0, sol.xstar, sol.xstar)


def test_hk_matches_standalone_computation():
    prob = small_problem(5)
    t = 1.0 / prob.objective.L
    cfg = SolverConfig(algorithm="cpgd", p=1, schedule=FixedStep(t),
                       max_iters=5, diagnostics_hk=True, record_iterates=True)
    tr = run_cpgd(prob, config=cfg)
    op = prob.operator()
    x_prev = np.zeros(prob.dim)
    for i in range(len(tr)):
        y_prev = x_prev - t * prob.objective.grad(x_prev)
        h = compute_hk_diagnostic(prob.objective, op, t, tr.x_hist[i], y_prev)
        assert h == pytest.approx(tr.Hk[i], abs=1e-11)
        x_prev = tr.x_hist[i]


def test_diminishing_step_converges_to_solution():
    # strongly convex objective (curvature >= 1), lambda_k = 1/k, p in {1, 5}:
    # the tangent error decays like k^(-mu), so 1e5 iterations suffice
    for p in (1, 5):
        rng = np.random.default_rng(60 + p)
        inst = random_equality_instance(rng, n_max=6, d_max=1)
        n = inst.problem.graph.n
        Q = rng.uniform(1.0, 3.0, size=n).reshape(n, 1, 1)
        obj = QuadraticObjective(Q=Q, b=rng.normal(0, 3, size=(n, 1)))
        prob = Problem(graph=inst.problem.graph, cover=inst.problem.cover,
                       objective=obj, blocks=inst.problem.blocks, d=1)
        sol = solve_equality_qp(prob)
        cfg = SolverConfig(algorithm="cpgd", p=p, schedule=InvKStep(1.0),
                           max_iters=100_000, record_every=100_000,
                           use_affine_T=True)
        tr = run_cpgd(prob, config=cfg)
        assert np.linalg.norm(tr.x_final - sol.xstar) < 1e-3


def test_early_stop_at_optimum():
    # the optimum is a fixed point of the projected-gradient baseline
    prob = small_problem(6)
    sol = solve_equality_qp(prob)
    from cliquepgd import project_stacked_equality, stacked_equality_system
    E, r = stacked_equality_system(prob.operator())
    cfg = SolverConfig(algorithm="pgd", schedule=FixedStep(1.0),
                       max_iters=500, x0=sol.xstar, fstar=sol.fstar,
                       early_stop=True)
    tr = run_pgd(prob, lambda v: project_stacked_equality(E, r, v), cfg)
    assert len(tr) == 1
    assert tr.rel_gap[0] <= 1e-12
    assert tr.V[0] <= 1e-12


def test_pgd_without_constraints_is_gradient_descent():
    rng = np.random.default_rng(8)
    n = 5
    g = build_graph(n, [])
    cover = maximal_cliques(g)
    a = rng.uniform(0, 10, n)
    obj = QuadraticObjective.least_squares(a)
    prob = Problem(graph=g, cover=cover, objective=obj, blocks={}, d=1)
    cfg = SolverConfig(algorithm="pgd", schedule=FixedStep(0.5), max_iters=40,
                       record_iterates=True)
    tr = run_pgd(prob, lambda v: v, cfg)
    x = np.zeros(n)
    for i in range(40):
        x = x - 0.5 * (x - a)
        assert np.array_equal(tr.x_hist[i], x)


def test_pgd_stationary_at_solution():
    prob = small_problem(9)
    sol = solve_equality_qp(prob)
    from cliquepgd import project_stacked_equality, stacked_equality_system
    E, r = stacked_equality_system(prob.operator())
    cfg = SolverConfig(algorithm="pgd", schedule=FixedStep(0.7), max_iters=30,
                       x0=sol.xstar, record_iterates=True)
    tr = run_pgd(prob, lambda v: project_stacked_equality(E, r, v), cfg)
    assert np.max(np.abs(tr.x_hist - sol.xstar)) < 1e-10


def test_invsqrtk_schedule_runs():
    prob = small_problem(11)
    cfg = SolverConfig(algorithm="cpgd", p=1, schedule=InvSqrtKStep(0.5),
                       max_iters=30)
    tr = run_cpgd(prob, config=cfg)
    assert np.all(np.isfinite(tr.f))
    assert tr.schedule == "invsqrtk:0.5"
