"""Command line entry point and scenario runner.

Subcommands mirror the library: window, density, factorize, paradox,
verify, plus `run` for scenario files and `compare` for diffing two trace
artifacts on a shared grid.  Runs are deterministic for a fixed seed; all
artifacts go through the fixed-format serializer, so identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import density as density_mod
from . import pathology
from .config import SCHEMA_VERSION, Scenario, load_scenario, load_space, expression_variable
from .errors import CondpointError, ConfigError, GridMismatch, TaskError
from .factorization import factorize
from .partition import partition_cond_exp, verify_cond_exp
from .serialize import to_json, write_csv, write_json
from .spaces import DensityGrid2D, expectation
from .window import Schedule, evaluate_on_grid, window_estimate

PARADOX_INSTANCES = {"ratio-normal": pathology.ratio_normal_instance}


def _write_artifact(path, doc: dict):
    doc.setdefault("schema_version", SCHEMA_VERSION)
    return write_json(path, doc)


def _schedule_from(params: dict) -> Schedule:
    spec = params.get("schedule") or {}
    return Schedule(eps0=spec.get("eps0"), factor=float(spec.get("factor", 0.5)),
                    depth=int(spec.get("depth", 20)))


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise ConfigError(f"grid spec must be 'a:b:n', got {text!r}") from exc


# ---------------------------------------------------------------------------
# Scenario tasks: each returns (ok, artifacts written)


def _task_partition(scn: Scenario, outdir: Path):
    bundle = scn.bundle
    X = bundle.variable(scn.params["x"])
    part = bundle.partition(scn.params["partition"])
    pce = partition_cond_exp(bundle.space, X, part)
    doc = pce.to_json_dict()
    doc["scenario"] = scn.name
    doc["expectation"] = expectation(bundle.space, X).value
    path = _write_artifact(outdir / f"{scn.out_base or scn.name}.json", doc)
    return True, [path]


def _task_window(scn: Scenario, outdir: Path):
    bundle = scn.bundle
    X = bundle.variable(scn.params["x"])
    Y = bundle.variable(scn.params["y"])
    tol = scn.tol if scn.tol is not None else 1e-6
    schedule = _schedule_from(scn.params)
    base = scn.out_base or scn.name
    if "at" in scn.params:
        trace = window_estimate(bundle.space, X, Y, float(scn.params["at"]),
                                schedule=schedule, tol=tol)
        doc = trace.to_json_dict()
        doc["scenario"] = scn.name
        paths = [_write_artifact(outdir / f"{base}.json", doc)]
        rows = [(s.eps, s.estimate, s.se, s.n, s.prob) for s in trace.steps]
        paths.append(write_csv(outdir / f"{base}.csv",
                               ["eps", "estimate", "se", "n", "prob"], rows))
        return trace.verdict == "Converged", paths
    grid_spec = scn.params["grid"]
    y_grid = np.linspace(float(grid_spec[0]), float(grid_spec[1]), int(grid_spec[2]))
    table = evaluate_on_grid(bundle.space, X, Y, y_grid, schedule=schedule, tol=tol)
    doc = table.to_json_dict()
    doc["scenario"] = scn.name
    paths = [_write_artifact(outdir / f"{base}.json", doc)]
    rows = list(zip(doc["grid"], doc["values"], doc["verdicts"]))
    paths.append(write_csv(outdir / f"{base}.csv", ["y", "value", "verdict"], rows))
    ok = all(v == "Converged" for v in table.verdicts)
    return ok, paths


def _task_density(scn: Scenario, outdir: Path):
    bundle = scn.bundle
    joint = bundle.space
    if not isinstance(joint, DensityGrid2D):
        raise TaskError("density tasks need a grid2d joint space")
    y = float(scn.params["at"])
    cd = density_mod.conditional_density(joint, y)
    doc = {"kind": "conditional_density_summary", "scenario": scn.name,
           "y": y, "marginal": cd.marginal_value, "defect": cd.defect,
           "mean": cd.expectation()}
    if "expect" in scn.params:
        g = expression_variable("g", scn.params["expect"])
        doc["expect"] = {"expr": scn.params["expect"],
                         "value": cd.expectation(lambda z: g.fn({"z": z}))}
    base = scn.out_base or scn.name
    paths = [_write_artifact(outdir / f"{base}.json", doc)]
    paths.append(write_csv(outdir / f"{base}.csv", ["z", "density"],
                           zip(cd.nodes, cd.values)))
    return True, paths


def _task_factorize(scn: Scenario, outdir: Path):
    bundle = scn.bundle
    g = bundle.variable(scn.params["g"])
    Y = bundle.variable(scn.params["y"])
    res = factorize(bundle.space, g, Y, scn.params["levels"],
                    band=scn.params.get("band"))
    doc = res.to_json_dict()
    doc["scenario"] = scn.name
    path = _write_artifact(outdir / f"{scn.out_base or scn.name}.json", doc)
    return res.verdict == "Factored", [path]


def _task_paradox(scn: Scenario, outdir: Path):
    name = scn.params.get("instance", "ratio-normal")
    if name not in PARADOX_INSTANCES:
        raise TaskError(f"unknown paradox instance {name!r}")
    kwargs = {}
    if scn.seed is not None:
        kwargs["seed"] = scn.seed
    if "budget" in scn.params:
        kwargs["budget"] = int(scn.params["budget"])
    inst = PARADOX_INSTANCES[name](**kwargs)
    tol = scn.tol if scn.tol is not None else 1e-6
    report = pathology.borel_kolmogorov(inst["space"], inst["X"], inst["families"],
                                        inst["schedule"], tol=tol,
                                        description=inst["description"])
    doc = report.to_json_dict()
    doc["scenario"] = scn.name
    ok = all(t.verdict == "Converged" for t in report.traces.values())
    if scn.params.get("control", True):
        control = pathology.borel_kolmogorov(inst["space"], inst["X"],
                                             inst["control_families"],
                                             inst["schedule"], tol=tol,
                                             description="control: two window "
                                                         "families of one variable")
        doc["control"] = control.to_json_dict()
        ok = ok and all(t.verdict == "Converged" for t in control.traces.values())
    path = _write_artifact(outdir / f"{scn.out_base or scn.name}.json", doc)
    return ok, [path]


def _task_verify(scn: Scenario, outdir: Path):
    bundle = scn.bundle
    X = bundle.variable(scn.params["x"])
    candidate = bundle.variable(scn.params["candidate"])
    gens = bundle.generator_events(scn.params["generators"])
    report = verify_cond_exp(bundle.space, X, candidate, gens)
    doc = report.to_json_dict()
    doc["scenario"] = scn.name
    path = _write_artifact(outdir / f"{scn.out_base or scn.name}.json", doc)
    return report.passed, [path]


_TASKS = {
    "partition": _task_partition,
    "window": _task_window,
    "density": _task_density,
    "factorize": _task_factorize,
    "paradox": _task_paradox,
    "verify": _task_verify,
}


def run(scenario: Scenario, outdir: Path) -> dict:
    """Run one scenario; returns a machine-readable summary entry."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        ok, paths = _TASKS[scenario.task](scenario, outdir)
        return {"name": scenario.name, "task": scenario.task, "ok": ok,
                "artifacts": sorted(p.name for p in paths)}
    except CondpointError as exc:
        return {"name": scenario.name, "task": scenario.task, "ok": False,
                "error": f"{type(exc).__name__}: {exc}", "artifacts": []}


def _run_path(path_str: str, outdir_str: str) -> dict:
    try:
        scenario = load_scenario(path_str)
    except CondpointError as exc:
        return {"name": Path(path_str).stem, "task": None, "ok": False,
                "error": f"{type(exc).__name__}: {exc}", "artifacts": []}
    return run(scenario, Path(outdir_str))


def run_paths(paths, outdir: Path, parallel: bool = False) -> dict:
    entries = []
    if parallel and len(paths) > 1:
        with ProcessPoolExecutor() as pool:
            entries = list(pool.map(_run_path, [str(p) for p in paths],
                                    [str(outdir)] * len(paths)))
    else:
        entries = [_run_path(str(p), str(outdir)) for p in paths]
    entries.sort(key=lambda e: e["name"])
    summary = {"kind": "run_summary", "schema_version": SCHEMA_VERSION,
               "ok": all(e["ok"] for e in entries), "scenarios": entries}
    if entries:
        write_json(Path(outdir) / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# Trace comparison


def _series(doc: dict, family: str | None = None):
    if family is not None:
        families = doc.get("families") or {}
        if family not in families:
            raise GridMismatch(f"no family {family!r} in this artifact")
        doc = families[family]
    kind = doc.get("kind")
    if kind == "window_grid":
        return doc["grid"], doc["values"]
    if kind == "window_trace":
        return ([s["eps"] for s in doc["steps"]],
                [s["estimate"] for s in doc["steps"]])
    if "grid" in doc and "values" in doc:
        return doc["grid"], doc["values"]
    raise GridMismatch(f"artifact kind {kind!r} carries no comparable series")


def compare(trace_a: dict, trace_b: dict, tol: float,
            family_a: str | None = None, family_b: str | None = None) -> dict:
    """Per-node absolute differences of two traces on one shared grid."""
    grid_a, vals_a = _series(trace_a, family_a)
    grid_b, vals_b = _series(trace_b, family_b)
    if len(grid_a) != len(grid_b) or any(a != b for a, b in zip(grid_a, grid_b)):
        raise GridMismatch("traces do not share a grid")
    diffs = []
    for a, b in zip(vals_a, vals_b):
        if a is None or b is None:
            diffs.append(float("nan"))
        else:
            diffs.append(abs(float(a) - float(b)))
    finite = [d for d in diffs if d == d]
    max_diff = max(finite) if finite else float("nan")
    passed = bool(finite) and len(finite) == len(diffs) and max_diff <= tol
    return {"kind": "compare", "schema_version": SCHEMA_VERSION,
            "grid": list(grid_a), "diffs": diffs,
            "max_diff": max_diff, "tol": float(tol), "passed": passed}


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="override the space seed")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", type=Path, default=None, help="output JSON path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condpoint")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("window", help="shrinking-window conditional expectation")
    p.add_argument("--space", required=True, type=Path)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--at", type=float)
    group.add_argument("--grid", type=str, help="a:b:n")
    _add_common(p)

    p = sub.add_parser("density", help="conditional density from a 2D joint")
    p.add_argument("--joint", required=True, type=Path)
    p.add_argument("--at", required=True, type=float)
    p.add_argument("--emit-density", type=Path, default=None)
    p.add_argument("--expect", type=str, default=None, help="expression in z")
    _add_common(p)

    p = sub.add_parser("factorize", help="factor a variable through another")
    p.add_argument("--space", required=True, type=Path)
    p.add_argument("--g", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--levels", required=True, help="comma-separated level values")
    p.add_argument("--band", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("paradox", help="two-family conditioning paradox")
    p.add_argument("--instance", default="ratio-normal")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--no-control", action="store_true")
    _add_common(p)

    p = sub.add_parser("verify", help="check a conditional-expectation candidate")
    p.add_argument("--space", required=True, type=Path)
    p.add_argument("--x", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--generators", required=True)
    _add_common(p)

    p = sub.add_parser("run", help="run scenario files")
    p.add_argument("scenarios", nargs="*", type=Path)
    p.add_argument("--outdir", type=Path, default=Path("out"))
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("compare", help="diff two trace artifacts")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--family-a", default=None)
    p.add_argument("--family-b", default=None)
    p.add_argument("--out", type=Path, default=None)
    return parser


def _inline_scenario(args, task: str, params: dict, space_path=None) -> Scenario:
    bundle = load_space(space_path) if space_path is not None else None
    if bundle is not None and args.seed is not None and hasattr(bundle.space, "seed"):
        bundle.space.seed = args.seed
        bundle.space._cache.clear()
    name = args.out.stem if args.out is not None else task
    return Scenario(name=name, bundle=bundle, task=task, params=params,
                    seed=args.seed, tol=args.tol, out_base=None)


def _emit_result(doc: dict, out: Path | None) -> None:
    if out is not None:
        write_json(out, doc)
    sys.stdout.write(to_json(doc))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # let `--grid -2:2:9` through argparse despite the leading dash
    for i in range(len(argv) - 1, 0, -1):
        if argv[i - 1] == "--grid" and ":" in argv[i]:
            argv[i - 1:i + 1] = [f"--grid={argv[i]}"]
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except CondpointError as exc:
        sys.stderr.write(to_json({"error": type(exc).__name__, "message": str(exc)}))
        return 2


def _dispatch(args) -> int:
    import json
    import tempfile

    if args.command == "run":
        summary = run_paths(args.scenarios, args.outdir, parallel=args.parallel)
        sys.stdout.write(to_json(summary))
        return 0 if summary["ok"] else 1

    if args.command == "compare":
        a = json.loads(Path(args.a).read_text(encoding="utf-8"))
        b = json.loads(Path(args.b).read_text(encoding="utf-8"))
        doc = compare(a, b, args.tol, args.family_a, args.family_b)
        _emit_result(doc, args.out)
        return 0 if doc["passed"] else 1

    with tempfile.TemporaryDirectory() as tmp:
        outdir = Path(tmp)
        if args.command == "window":
            params = {"x": args.x, "y": args.y}
            if args.at is not None:
                params["at"] = args.at
            else:
                g = _parse_grid(args.grid)
                params["grid"] = [float(g[0]), float(g[-1]), len(g)]
            scn = _inline_scenario(args, "window", params, args.space)
        elif args.command == "density":
            params = {"at": args.at}
            if args.expect is not None:
                params["expect"] = args.expect
            scn = _inline_scenario(args, "density", params, args.joint)
        elif args.command == "factorize":
            levels = [float(v) for v in args.levels.split(",")]
            params = {"g": args.g, "y": args.y, "levels": levels}
            if args.band is not None:
                params["band"] = args.band
            scn = _inline_scenario(args, "factorize", params, args.space)
        elif args.command == "paradox":
            params = {"instance": args.instance, "control": not args.no_control}
            if args.budget is not None:
                params["budget"] = args.budget
            scn = _inline_scenario(args, "paradox", params)
        elif args.command == "verify":
            params = {"x": args.x, "candidate": args.candidate,
                      "generators": args.generators}
            scn = _inline_scenario(args, "verify", params, args.space)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command!r}")
        summary = run(scn, outdir)
        produced = [outdir / n for n in summary["artifacts"]]
        json_docs = [p for p in produced if p.suffix == ".json"]
        doc = json.loads(json_docs[0].read_text(encoding="utf-8")) if json_docs else {}
        if args.command == "density" and getattr(args, "emit_density", None):
            csvs = [p for p in produced if p.suffix == ".csv"]
            if csvs:
                Path(args.emit_density).parent.mkdir(parents=True, exist_ok=True)
                Path(args.emit_density).write_bytes(csvs[0].read_bytes())
        _emit_result(doc if json_docs else summary, getattr(args, "out", None))
        if "error" in summary:
            sys.stderr.write(to_json({"error": summary["error"]}))
        return 0 if summary["ok"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
