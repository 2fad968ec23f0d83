"""Centralized solver loops: plain and accelerated clique-projected descent
plus the projected-gradient baseline.

The plain method alternates a gradient step with p applications of the
clique-based projection; the accelerated variant adds heavy-ball-style
momentum with the classic sigma recursion sigma_{k+1} = (1+sqrt(1+4s^2))/2.
Fixed steps t must satisfy t <= 1/L; the O(1/k) and O(1/k^2) merit bounds
are checkable on traces via check_rate_bound for p = 1 runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InputError, NumericError
from .problem import Problem
from .projection import CliqueOperator

ALGORITHMS = ("cpgd", "acpgd", "pgd", "apgd")


# ---------------------------------------------------------------------------
# step schedules

@dataclass(frozen=True)
class FixedStep:
    """lambda_k = t for all k; requires t in (0, 1/L]."""

    t: float
    is_fixed = True

    def step(self, k: int) -> float:
        return self.t

    def describe(self) -> str:
        return f"fixed:{self.t:g}"


@dataclass(frozen=True)
class InvKStep:
    """lambda_k = c / k."""

    c: float = 1.0
    is_fixed = False

    def step(self, k: int) -> float:
        return self.c / k

    def describe(self) -> str:
        return f"invk:{self.c:g}"


@dataclass(frozen=True)
class InvSqrtKStep:
    """lambda_k = c / sqrt(k); meant for strongly monotone gradients."""

    c: float = 1.0
    is_fixed = False

    def step(self, k: int) -> float:
        return self.c / np.sqrt(k)

    def describe(self) -> str:
        return f"invsqrtk:{self.c:g}"


def parse_schedule(spec: str):
    """Parse 'fixed:<t>' | 'invk:<c>' | 'invsqrtk:<c>'."""
    try:
        kind, _, val = spec.partition(":")
        value = float(val) if val else 1.0
    except ValueError as e:
        raise InputError(f"bad step schedule {spec!r}") from e
    if value <= 0:
        raise InputError(f"step parameter must be positive in {spec!r}")
    if kind == "fixed":
        return FixedStep(value)
    if kind == "invk":
        return InvKStep(value)
    if kind == "invsqrtk":
        return InvSqrtKStep(value)
    raise InputError(f"unknown step schedule kind {kind!r}")


# ---------------------------------------------------------------------------
# momentum sequence

def sigma_next(sigma: float) -> float:
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * sigma * sigma))


def sigma_sequence(kmax: int) -> np.ndarray:
    """sigma_0 .. sigma_kmax with sigma_0 = 1."""
    out = np.empty(kmax + 1)
    out[0] = 1.0
    for k in range(kmax):
        out[k + 1] = sigma_next(out[k])
    return out


@dataclass
class AccelState:
    """Momentum bookkeeping for the accelerated variants."""

    sigma: float = 1.0
    x_prev: np.ndarray | None = None

    def advance(self, x_new: np.ndarray) -> np.ndarray:
        """Consume x(k+1), return the extrapolated point x_hat(k+1)."""
        s_next = sigma_next(self.sigma)
        theta = (self.sigma - 1.0) / s_next
        x_hat = x_new + theta * (x_new - self.x_prev)
        self.sigma = s_next
        self.x_prev = x_new
        return x_hat


# ---------------------------------------------------------------------------
# configuration and traces

@dataclass
class SolverConfig:
    algorithm: str = "cpgd"
    p: int = 1
    schedule: object = field(default_factory=lambda: InvKStep(1.0))
    max_iters: int = 1000
    record_every: int = 1
    diagnostics_hk: bool = False
    x0: np.ndarray | None = None
    fstar: float | None = None
    record_iterates: bool = False
    early_stop: bool = False
    gap_tol: float = 1e-12
    v_tol: float = 1e-12
    use_affine_T: bool = False

    def validate(self, objective=None):
        if self.algorithm not in ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        if self.p < 1:
            raise InputError("p must be >= 1")
        if self.max_iters < 1 or self.record_every < 1:
            raise InputError("max_iters and record_every must be >= 1")
        fixed = getattr(self.schedule, "is_fixed", False)
        if self.algorithm in ("acpgd", "apgd") and not fixed:
            raise InputError(f"{self.algorithm} requires a fixed step schedule")
        if fixed:
            t = self.schedule.t
            if t <= 0:
                raise InputError("fixed step must be positive")
            if objective is not None and t > (1.0 / objective.L) * (1 + 1e-12):
                raise InputError(
                    f"fixed step {t:g} exceeds 1/L = {1.0 / objective.L:g}"
                )


class IterationRecord(NamedTuple):
    k: int
    f: float
    V: float
    J: float | None
    rel_gap: float | None
    Hk: float | None
    elapsed: float


@dataclass
class Trace:
    algorithm: str
    p: int
    schedule: str
    k: np.ndarray
    f: np.ndarray
    V: np.ndarray
    J: np.ndarray | None
    rel_gap: np.ndarray | None
    Hk: np.ndarray | None
    elapsed: np.ndarray
    x_final: np.ndarray
    x_hist: np.ndarray | None = None

    def __len__(self):
        return len(self.k)

    def record(self, idx: int) -> IterationRecord:
        pick = lambda arr: None if arr is None else float(arr[idx])
        return IterationRecord(
            k=int(self.k[idx]), f=float(self.f[idx]), V=float(self.V[idx]),
            J=pick(self.J), rel_gap=pick(self.rel_gap), Hk=pick(self.Hk),
            elapsed=float(self.elapsed[idx]),
        )


class _Recorder:
    def __init__(self, objective, op, config, t_fixed):
        self.objective = objective
        self.op = op
        self.config = config
        self.t_fixed = t_fixed
        self.rows = []
        self.xs = [] if config.record_iterates else None
        self.t0 = time.perf_counter()

    def add(self, k, x, hk=None):
        f = self.objective.value(x)
        if not np.isfinite(f) or not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite iterate at k={k}")
        v = self.op.eval_V(x) if self.op is not None else np.nan
        j = f + v / self.t_fixed if self.t_fixed is not None else None
        gap = None
        if self.config.fstar is not None:
            gap = abs(f - self.config.fstar) / self.config.fstar
        self.rows.append((k, f, v, j, gap, hk, time.perf_counter() - self.t0))
        if self.xs is not None:
            self.xs.append(x.copy())
        return gap, v

    def build(self, algorithm, p, schedule, x_final):
        cols = list(zip(*self.rows)) if self.rows else [[]] * 7
        getcol = lambda i, like=float: np.asarray(cols[i], dtype=like)
        opt = lambda i: None if all(v is None for v in cols[i]) else np.asarray(
            [np.nan if v is None else v for v in cols[i]], dtype=float)
        return Trace(
            algorithm=algorithm, p=p, schedule=schedule.describe(),
            k=getcol(0, int), f=getcol(1), V=getcol(2),
            J=opt(3), rel_gap=opt(4), Hk=opt(5), elapsed=getcol(6),
            x_final=x_final.copy(),
            x_hist=None if self.xs is None else np.asarray(self.xs),
        )


def _initial_point(config, dim):
    if config.x0 is None:
        return np.zeros(dim)
    x0 = np.asarray(config.x0, dtype=float)
    if x0.shape != (dim,):
        raise InputError(f"x0 has shape {x0.shape}, expected ({dim},)")
    return x0.copy()


def _tp_evaluator(op: CliqueOperator, config: SolverConfig) -> Callable:
    """p-fold application of T; composes the exact affine form when allowed."""
    if config.use_affine_T:
        aff = op.as_affine()
        if aff is not None:
            M, c = aff
            Mp, cp = M, c
            for _ in range(config.p - 1):
                Mp = M @ Mp
                cp = M @ cp + c
            return lambda y: Mp @ y + cp
    return lambda y: op.apply_T_power(y, config.p)


def compute_hk_diagnostic(objective, op: CliqueOperator, t: float, x_k, y_prev) -> float:
    """Upper merit surrogate for fixed-step p = 1 runs:
    f(x(k)) + V(y(k-1))/t - ||y(k-1) - T(y(k-1))||^2 / (2t)."""
    if t <= 0:
        raise InputError("t must be positive")
    y_prev = np.asarray(y_prev, dtype=float)
    ty = op.apply_T(y_prev)
    r = y_prev - ty
    return float(objective.value(np.asarray(x_k, dtype=float))
                 + op.eval_V(y_prev) / t - (r @ r) / (2.0 * t))


# ---------------------------------------------------------------------------
# solver loops

def run_cpgd(problem: Problem, op: CliqueOperator | None = None,
             config: SolverConfig | None = None) -> Trace:
    """Gradient step with lambda_{k+1}, then p clique projections."""
    config = config or SolverConfig()
    if config.algorithm != "cpgd":
        raise InputError(f"run_cpgd got algorithm {config.algorithm!r}")
    obj = problem.objective
    config.validate(obj)
    op = op or problem.operator()
    tp = _tp_evaluator(op, config)
    t_fixed = config.schedule.t if config.schedule.is_fixed else None
    hk_on = config.diagnostics_hk and t_fixed is not None and config.p == 1
    rec = _Recorder(obj, op, config, t_fixed)
    x = _initial_point(config, op.dim)
    for k in range(config.max_iters):
        lam = config.schedule.step(k + 1)
        y = x - lam * obj.grad(x)
        x = tp(y)
        k1 = k + 1
        if k1 % config.record_every == 0 or k1 == config.max_iters:
            hk = None
            if hk_on:
                r = y - x  # x = T(y) when p == 1
                hk = obj.value(x) + op.eval_V(y) / t_fixed - (r @ r) / (2 * t_fixed)
            gap, v = rec.add(k1, x, hk)
            if config.early_stop and gap is not None and gap < config.gap_tol and v < config.v_tol:
                break
    return rec.build("cpgd", config.p, config.schedule, x)


def run_acpgd(problem: Problem, op: CliqueOperator | None = None,
              config: SolverConfig | None = None) -> Trace:
    """Accelerated variant: projections applied at the extrapolated point."""
    config = config or SolverConfig(algorithm="acpgd", schedule=FixedStep(0.001))
    if config.algorithm != "acpgd":
        raise InputError(f"run_acpgd got algorithm {config.algorithm!r}")
    obj = problem.objective
    config.validate(obj)
    op = op or problem.operator()
    tp = _tp_evaluator(op, config)
    t = config.schedule.t
    hk_on = config.diagnostics_hk and config.p == 1
    rec = _Recorder(obj, op, config, t)
    x = _initial_point(config, op.dim)
    x_hat = x.copy()
    accel = AccelState(sigma=1.0, x_prev=x)
    for k in range(config.max_iters):
        y = x_hat - t * obj.grad(x_hat)
        x = tp(y)
        x_hat = accel.advance(x)
        k1 = k + 1
        if k1 % config.record_every == 0 or k1 == config.max_iters:
            hk = None
            if hk_on:
                r = y - x
                hk = obj.value(x) + op.eval_V(y) / t - (r @ r) / (2 * t)
            gap, v = rec.add(k1, x, hk)
            if config.early_stop and gap is not None and gap < config.gap_tol and v < config.v_tol:
                break
    return rec.build("acpgd", config.p, config.schedule, x)


def run_pgd(problem: Problem, projector: Callable, config: SolverConfig | None = None) -> Trace:
    """Projected gradient baseline x(k+1) = P(x(k) - lambda_{k+1} grad f);
    algorithm 'apgd' adds the same momentum as the accelerated method."""
    config = config or SolverConfig(algorithm="pgd")
    if config.algorithm not in ("pgd", "apgd"):
        raise InputError(f"run_pgd got algorithm {config.algorithm!r}")
    obj = problem.objective
    config.validate(obj)
    accelerated = config.algorithm == "apgd"
    op = problem.operator()
    rec = _Recorder(obj, op, config, None)
    x = _initial_point(config, problem.dim)
    x_hat = x.copy()
    accel = AccelState(sigma=1.0, x_prev=x)
    for k in range(config.max_iters):
        lam = config.schedule.step(k + 1)
        base = x_hat if accelerated else x
        x = np.asarray(projector(base - lam * obj.grad(base)), dtype=float)
        if accelerated:
            x_hat = accel.advance(x)
        k1 = k + 1
        if k1 % config.record_every == 0 or k1 == config.max_iters:
            gap, v = rec.add(k1, x)
            if config.early_stop and gap is not None and gap < config.gap_tol and v < config.v_tol:
                break
    return rec.build(config.algorithm, config.p, config.schedule, x)


# ---------------------------------------------------------------------------
# rate-bound verification

def check_rate_bound(trace: Trace, x0, xstar, fstar, t, accelerated=False, rtol=1e-9):
    """Verify the fixed-step merit bound along a p = 1 trace.

    Plain:        J(x(k)) - f* <= ||x0 - x*||^2 / (2 t k)
    Accelerated:  J(x(k)) - f* <= 2 ||x0 - x*||^2 / (t k^2)

    Returns (ok, max_excess) where excess is (lhs - bound) / (1 + bound).
    """
    if trace.J is None:
        raise InputError("trace has no merit values; run with a fixed step")
    if trace.p != 1:
        raise InputError("the merit bounds are only established for p = 1")
    d2 = float(np.sum((np.asarray(x0) - np.asarray(xstar)) ** 2))
    ks = trace.k.astype(float)
    bound = 2.0 * d2 / (t * ks**2) if accelerated else d2 / (2.0 * t * ks)
    excess = (trace.J - fstar - bound) / (1.0 + bound)
    worst = float(excess.max())
    return worst <= rtol, worst
