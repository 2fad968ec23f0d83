"""Command-line interface.

Subcommands:
  run      run an experiment grid from a JSON config (flags override fields)
  verify   run the full verification suite, one pass/fail line per criterion
  cliques  print the maximal cliques and averaging weights of a graph
  plot     render PNG figures from previously emitted panel CSVs

Exit codes: 0 success, 2 config/input error, 3 numeric failure or failed
verification, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (ExperimentConfig, run_experiment, warn_empty_grid,
                    write_outputs)
from .errors import InputError, NumericError, OracleError, ResourceLimitError
from .graph import build_graph, graph_from_cliques, maximal_cliques


def _build_parser():
    ap = argparse.ArgumentParser(prog="cliquepgd",
                                 description="clique-projected gradient descent toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="chatty logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", required=True, help="JSON config path")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override generator seed")
    run.add_argument("--algo", choices=["cpgd", "acpgd", "pgd", "apgd"],
                     default=None, help="replace the grid with one algorithm")
    run.add_argument("--p", type=int, default=None, help="override projection count")
    run.add_argument("--step", default=None,
                     help="override step schedule: fixed:<t>|invk:<c>|invsqrtk:<c>")
    run.add_argument("--iters", type=int, default=None, help="override max iterations")
    run.add_argument("--plots", action="store_true",
                     help="also render PNG figures next to the CSVs")

    ver = sub.add_parser("verify", help="run the verification suite")
    ver.add_argument("--only", default=None,
                     help="comma-separated criterion numbers, e.g. 1,5,8")

    clq = sub.add_parser("cliques", help="print maximal cliques and weights")
    clq.add_argument("--graph", required=True, help="JSON graph path")

    plo = sub.add_parser("plot", help="render figures from panel CSVs")
    plo.add_argument("--dir", required=True, help="directory with panel_*.csv files")
    return ap


def _apply_overrides(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    data = dict(cfg.raw)
    if args.seed is not None:
        problem = dict(data.get("problem", {}))
        if "generator" not in problem:
            raise InputError("--seed only applies to generated problems")
        problem["seed"] = args.seed
        data["problem"] = problem
    if args.iters is not None:
        data["max_iters"] = args.iters
    if args.algo is not None:
        entry = {"algorithm": args.algo,
                 "step": args.step or "invk:1"}
        if args.p is not None:
            entry["p"] = args.p
        data["grid"] = [entry]
    else:
        grid = [dict(e) for e in data.get("grid", [])]
        for e in grid:
            if args.step is not None:
                e["step"] = args.step
            if args.p is not None and e.get("algorithm") in ("cpgd", "acpgd"):
                e["p"] = args.p
        data["grid"] = grid
    return ExperimentConfig.from_dict(data)


def _cmd_run(args, log) -> int:
    cfg = _apply_overrides(args)
    if not cfg.grid:
        warn_empty_grid()
        return 0
    result = run_experiment(cfg, log=log)
    out_dir = Path(args.out) if args.out else Path("cliquepgd-out")
    write_outputs(result, cfg, out_dir, log=log)
    for sid in sorted(result.traces):
        tr = result.traces[sid]
        gap = tr.rel_gap[-1] if tr.rel_gap is not None else float("nan")
        print(f"{sid}: final f={tr.f[-1]:.6g} rel_gap={gap:.3e}")
    if args.plots:
        from .plotting import render_all_panels
        for png in render_all_panels(out_dir):
            log(f"rendered {png}")
    print(f"outputs in {out_dir}")
    return 0


def _cmd_verify(args) -> int:
    from .acceptance import run_criteria
    only = None
    if args.only:
        try:
            only = [int(tok) for tok in args.only.split(",")]
        except ValueError as e:
            raise InputError(f"bad --only list {args.only!r}") from e
    results = run_criteria(only=only, stream=sys.stdout)
    return 0 if all(r.passed for r in results) else 3


def _cmd_cliques(args) -> int:
    try:
        spec = json.loads(Path(args.graph).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read graph {args.graph}: {e}") from e
    n = int(spec["n"])
    if "edges" in spec:
        g = build_graph(n, [(int(i) - 1, int(j) - 1) for i, j in spec["edges"]])
    elif "cliques" in spec:
        g = graph_from_cliques(n, [[int(v) - 1 for v in c] for c in spec["cliques"]])
    else:
        raise InputError("graph spec needs 'edges' or 'cliques'")
    cover = maximal_cliques(g)
    for l, c in enumerate(cover.cliques):
        print(f"C_{l + 1} = {{{', '.join(str(v + 1) for v in c)}}}")
    weights = ", ".join(f"{w:g}" for w in cover.weights)
    print(f"gamma = [{weights}]")
    return 0


def _cmd_plot(args) -> int:
    from .plotting import render_all_panels
    pngs = render_all_panels(args.dir)
    if not pngs:
        raise InputError(f"no panel_*.csv files in {args.dir}")
    for png in pngs:
        print(f"rendered {png}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else (lambda msg: None)
    try:
        if args.command == "run":
            return _cmd_run(args, log)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "cliques":
            return _cmd_cliques(args)
        if args.command == "plot":
            return _cmd_plot(args)
        raise InputError(f"unknown command {args.command!r}")
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NumericError, ResourceLimitError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3
    except OracleError as e:
        print(f"oracle failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
