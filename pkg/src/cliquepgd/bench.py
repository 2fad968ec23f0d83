"""Experiment harness: config ingestion, the 20-agent allocation benchmark,
grid runs, and plot-ready CSV emission.

Problems come either inline (JSON spec with 1-based node indices) or from
the named allocation generator, which builds the four-community network,
draws the quadratic targets a_i uniformly from [0, 10] with numpy's PCG64
generator (seed recorded in the manifest), and attaches one per-clique sum
constraint with targets [7, 3, 5, 10].

Residual series use the relative optimality gap |f(x(k)) - f*| / f* with f*
from the exact KKT oracle. CSV floats are printed with 17 significant digits
so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraints import (AffineEquality, Ball, Box, Consensus, Halfspace,
                          SumEquality)
from .errors import InputError
from .graph import build_graph, graph_from_cliques, maximal_cliques
from .oracle import (dykstra_projector, project_stacked_equality,
                     solve_equality_qp, stacked_equality_system)
from .problem import Problem, QuadraticObjective
from .solver import (SolverConfig, Trace, parse_schedule, run_acpgd, run_cpgd,
                     run_pgd)

RNG_NAME = "numpy-pcg64"

# the four-community allocation network (0-based node indices)
ALLOCATION_N = 20
ALLOCATION_CLIQUES = (
    tuple(range(0, 6)),
    tuple(range(4, 9)),
    tuple(range(7, 12)),
    (8, 9) + tuple(range(12, 20)),
)
ALLOCATION_TARGETS = (7.0, 3.0, 5.0, 10.0)


def generate_allocation_problem(seed: int) -> Problem:
    """20 agents, d = 1, quadratic pull to random a_i, one sum constraint per
    community."""
    g = graph_from_cliques(ALLOCATION_N, ALLOCATION_CLIQUES)
    cover = maximal_cliques(g)
    by_members = {tuple(c): t for c, t in zip(ALLOCATION_CLIQUES, ALLOCATION_TARGETS)}
    if set(cover.cliques) != set(by_members):
        raise InputError("allocation network does not reproduce its four communities")
    blocks = {l: SumEquality(target=by_members[c]) for l, c in enumerate(cover.cliques)}
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 10.0, size=ALLOCATION_N)
    obj = QuadraticObjective.least_squares(a, d=1)
    return Problem(graph=g, cover=cover, objective=obj, blocks=blocks, d=1)


def default_allocation_grid() -> list[dict]:
    grid = []
    for p in (1, 10, 50):
        grid.append({"algorithm": "cpgd", "step": "invk:1", "p": p})
        grid.append({"algorithm": "cpgd", "step": "fixed:0.001", "p": p})
        grid.append({"algorithm": "acpgd", "step": "fixed:0.001", "p": p})
    grid.append({"algorithm": "pgd", "step": "invk:1"})
    grid.append({"algorithm": "pgd", "step": "fixed:0.001"})
    grid.append({"algorithm": "apgd", "step": "fixed:0.001"})
    return grid


# ---------------------------------------------------------------------------
# config ingestion

@dataclass
class ExperimentConfig:
    grid: list[dict]
    max_iters: int = 10_000
    record_every: int = 1
    generator: str | None = None
    seed: int | None = None
    problem_spec: dict | None = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise InputError("config root must be a JSON object")
        known = {"problem", "grid", "max_iters", "record_every"}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        problem = data.get("problem")
        if not isinstance(problem, dict):
            raise InputError("config needs a 'problem' object")
        generator = seed = spec = None
        if "generator" in problem:
            generator = problem["generator"]
            if generator != "allocation":
                raise InputError(f"unknown generator {generator!r}")
            if "seed" not in problem:
                raise InputError("generated problems require an integer 'seed'")
            seed = int(problem["seed"])
        else:
            spec = problem
        grid = data.get("grid", [])
        if not isinstance(grid, list):
            raise InputError("'grid' must be a list")
        for entry in grid:
            _validate_grid_entry(entry)
        max_iters = int(data.get("max_iters", 10_000))
        record_every = int(data.get("record_every", 1))
        if max_iters < 1 or record_every < 1:
            raise InputError("max_iters and record_every must be >= 1")
        return cls(grid=grid, max_iters=max_iters, record_every=record_every,
                   generator=generator, seed=seed, problem_spec=spec, raw=data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(data)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()
        ).hexdigest()[:16]


def _validate_grid_entry(entry):
    if not isinstance(entry, dict):
        raise InputError("grid entries must be objects")
    algo = entry.get("algorithm")
    if algo not in ("cpgd", "acpgd", "pgd", "apgd"):
        raise InputError(f"grid entry has unknown algorithm {algo!r}")
    parse_schedule(str(entry.get("step", "invk:1")))
    p = entry.get("p", 1)
    if not isinstance(p, int) or p < 1:
        raise InputError(f"grid entry p must be a positive integer, got {p!r}")


_SET_PARSERS = {
    "sum_eq": lambda s: SumEquality(target=float(s["target"])),
    "affine_eq": lambda s: AffineEquality(A=s["A"], b=s["b"]),
    "ball": lambda s: Ball(center=s["center"], radius=float(s["radius"])),
    "halfspace": lambda s: Halfspace(a=s["a"], b=float(s["b"])),
    "box": lambda s: Box(lo=s["lo"], hi=s["hi"]),
    "consensus": lambda s: Consensus(d=int(s.get("d", 1))),
}


def problem_from_spec(spec: dict) -> Problem:
    """Inline problem: 1-based node indices in the JSON are shifted here."""
    try:
        n = int(spec["n"])
        d = int(spec.get("d", 1))
        gspec = spec["graph"]
    except KeyError as e:
        raise InputError(f"problem spec missing key {e}") from e
    if "edges" in gspec:
        edges = [(int(i) - 1, int(j) - 1) for i, j in gspec["edges"]]
        g = build_graph(n, edges)
    elif "cliques" in gspec:
        cliques = [[int(v) - 1 for v in c] for c in gspec["cliques"]]
        g = graph_from_cliques(n, cliques)
    else:
        raise InputError("graph spec needs 'edges' or 'cliques'")
    cover = maximal_cliques(g)
    if "cliques" in gspec:
        given = {tuple(sorted(int(v) - 1 for v in c)) for c in gspec["cliques"]}
        if given != set(cover.cliques):
            raise InputError(
                "given cliques are not the maximal cliques of the induced graph"
            )
    ospec = spec.get("objective", {})
    kind = ospec.get("kind", "least_squares")
    if kind == "least_squares":
        targets = np.asarray(ospec["targets"], dtype=float)
        if targets.size != n * d:
            raise InputError(f"objective targets need {n * d} entries")
        obj = QuadraticObjective.least_squares(targets, d=d)
    elif kind == "quadratic":
        obj = QuadraticObjective(Q=np.asarray(ospec["Q"], dtype=float),
                                 b=np.asarray(ospec["b"], dtype=float))
    else:
        raise InputError(f"unknown objective kind {kind!r}")
    by_members = {tuple(c): l for l, c in enumerate(cover.cliques)}
    blocks = {}
    for c in spec.get("constraints", []):
        ckind = c.get("kind")
        if ckind not in _SET_PARSERS:
            raise InputError(f"unknown constraint kind {ckind!r}")
        if "clique" in c:
            l = int(c["clique"]) - 1
            if not 0 <= l < cover.q:
                raise InputError(f"constraint references clique {c['clique']} "
                                 f"but only {cover.q} exist")
        elif "members" in c:
            key = tuple(sorted(int(v) - 1 for v in c["members"]))
            if key not in by_members:
                raise InputError(f"no maximal clique with members {c['members']}")
            l = by_members[key]
        else:
            raise InputError("constraint needs 'clique' or 'members'")
        if l in blocks:
            raise InputError(f"clique {l + 1} has more than one constraint")
        try:
            blocks[l] = _SET_PARSERS[ckind](c)
        except KeyError as e:
            raise InputError(f"constraint {ckind!r} missing field {e}") from e
    return Problem(graph=g, cover=cover, objective=obj, blocks=blocks, d=d)


def build_problem(config: ExperimentConfig) -> Problem:
    if config.generator == "allocation":
        return generate_allocation_problem(config.seed)
    return problem_from_spec(config.problem_spec)


# ---------------------------------------------------------------------------
# experiment runs

@dataclass
class ResidualSeries:
    series_id: str
    k: np.ndarray
    rel_gap: np.ndarray


@dataclass
class ExperimentResult:
    problem: Problem
    fstar: float | None
    traces: dict[str, Trace]
    config_hash: str
    seed: int | None

    def residuals(self) -> dict[str, ResidualSeries]:
        out = {}
        for sid, tr in self.traces.items():
            if tr.rel_gap is not None:
                out[sid] = ResidualSeries(series_id=sid, k=tr.k.copy(),
                                          rel_gap=tr.rel_gap.copy())
        return out


def series_id(entry: dict) -> str:
    sid = f"{entry['algorithm']}_{entry.get('step', 'invk:1').replace(':', '-')}"
    if entry["algorithm"] in ("cpgd", "acpgd"):
        sid += f"_p{entry.get('p', 1)}"
    return sid


def run_experiment(config: ExperimentConfig, use_affine: bool = True,
                   log=None) -> ExperimentResult:
    """Run the whole grid on the configured problem.

    For affine-only constraint families the exact optimal value comes from
    the KKT oracle and the baseline projector is the stacked-equality
    projection; otherwise f* is left unset (no residual series) and the
    baseline projects with Dykstra.
    """
    problem = build_problem(config)
    op = problem.operator()
    affine = op.all_affine()
    fstar = None
    if affine:
        sol = solve_equality_qp(problem)
        fstar = sol.fstar
        E, r = stacked_equality_system(op)
        projector = lambda v: project_stacked_equality(E, r, v)
    else:
        projector = dykstra_projector(op)
    # the relative gap |f - f*| / f* only makes sense for f* > 0
    gap_ref = fstar if fstar is not None and fstar > 0 else None
    traces: dict[str, Trace] = {}
    for entry in config.grid:
        sid = series_id(entry)
        scfg = SolverConfig(
            algorithm=entry["algorithm"],
            p=int(entry.get("p", 1)),
            schedule=parse_schedule(str(entry.get("step", "invk:1"))),
            max_iters=config.max_iters,
            record_every=config.record_every,
            fstar=gap_ref,
            use_affine_T=use_affine and affine,
        )
        if log:
            log(f"running {sid} ({config.max_iters} iterations)")
        try:
            if entry["algorithm"] == "cpgd":
                traces[sid] = run_cpgd(problem, op, scfg)
            elif entry["algorithm"] == "acpgd":
                traces[sid] = run_acpgd(problem, op, scfg)
            else:
                traces[sid] = run_pgd(problem, projector, scfg)
        except Exception as e:
            raise type(e)(f"series {sid}: {e}") from e
    return ExperimentResult(problem=problem, fstar=fstar, traces=traces,
                            config_hash=config.config_hash(), seed=config.seed)


# ---------------------------------------------------------------------------
# output emission

def _fmt(x: float) -> str:
    return "%.17g" % x


def write_trace_csv(trace: Trace, path: Path):
    cols = [("k", trace.k), ("f", trace.f), ("V", trace.V)]
    if trace.rel_gap is not None:
        cols.append(("rel_gap", trace.rel_gap))
    if trace.J is not None:
        cols.append(("J", trace.J))
    lines = [",".join(name for name, _ in cols)]
    for i in range(len(trace)):
        row = [str(int(trace.k[i]))]
        row += [_fmt(float(arr[i])) for _, arr in cols[1:]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def emit_plot_data(result: ExperimentResult, out_dir: Path) -> dict[str, str]:
    """One CSV per panel: columns k then rel_gap per series. Panels group the
    clique-based runs by p; the baselines share one panel."""
    residuals = result.residuals()
    if not residuals:
        return {}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels: dict[str, list[ResidualSeries]] = {}
    for sid, series in residuals.items():
        tr = result.traces[sid]
        name = "pgd" if tr.algorithm in ("pgd", "apgd") else f"p{tr.p}"
        panels.setdefault(name, []).append(series)
    files = {}
    for name in sorted(panels):
        group = sorted(panels[name], key=lambda s: s.series_id)
        ks = group[0].k
        for s in group[1:]:
            if not np.array_equal(s.k, ks):
                raise InputError(f"panel {name}: series have different k grids")
        lines = [",".join(["k"] + [s.series_id for s in group])]
        for i in range(len(ks)):
            lines.append(",".join([str(int(ks[i]))] +
                                  [_fmt(float(s.rel_gap[i])) for s in group]))
        fname = f"panel_{name}.csv"
        (out_dir / fname).write_text("\n".join(lines) + "\n")
        files[name] = fname
    return files


def write_outputs(result: ExperimentResult, config: ExperimentConfig,
                  out_dir, log=None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series_files = {}
    for sid, tr in result.traces.items():
        fname = f"{sid}.csv"
        write_trace_csv(tr, out_dir / fname)
        series_files[sid] = fname
    panel_files = emit_plot_data(result, out_dir)
    manifest = {
        "rng": RNG_NAME,
        "seed": result.seed,
        "generator": config.generator,
        "config_hash": result.config_hash,
        "fstar": result.fstar,
        "max_iters": config.max_iters,
        "record_every": config.record_every,
        "series": series_files,
        "panels": panel_files,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    if log:
        log(f"wrote {len(series_files)} series and {len(panel_files)} panels to {out_dir}")
    return manifest


def warn_empty_grid(stream=None):
    print("warning: empty algorithm grid, nothing to run",
          file=stream if stream is not None else sys.stderr)
