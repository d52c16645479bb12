"""Command line: ``vtspline simulate|solve|render|verify``.

Exit codes: 0 success, 1 verification failure, 2 invalid input or failed
problem assumptions, 3 no convergence, 4 certification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .docio import (
    SCHEMA_VERSION,
    DocumentError,
    ProblemDocument,
    atoms_csv,
    dumps,
    fmt,
    loads,
    multi_from_record,
    multi_to_record,
    spline_from_record,
    spline_to_record,
)
from .lasso import NoConvergence, NumericalStall
from .measurements import InadmissibleFunctional, require_admissible
from .multidim import (
    GreenFactor,
    MultiAtom,
    MultiGrid,
    MultiSpline,
    PolyFactor,
    multi_apply,
    multi_lambda_max,
    multi_solve,
    to_tensor_spline,
)
from .odo_core import SingularGram
from .render import DEFAULT_RESOLUTION, DEFAULT_WINDOW, render_decomposition, render_spline
from .solver import AssumptionViolation, GridSpec, Problem, RankDeficientNullBlock, lambda_max, solve
from .tensor_spline import random_spline
from .verify import SUITES, representer_checks, representer_runs, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CERTIFICATION = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _read(path: str) -> dict:
    try:
        return loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _floats(text: str, count: int, flag: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise CliError(f"{flag} expects {count} comma-separated numbers") from exc
    if len(vals) != count:
        raise CliError(f"{flag} expects {count} comma-separated numbers")
    return vals


# ---------------------------------------------------------------- simulate


def _random_functionals(spec: dict, rng: np.random.Generator, doc: ProblemDocument) -> list[dict]:
    kind, count = spec.get("type", "box"), int(spec["count"])
    out = []
    if doc.multi:
        for _ in range(count):
            if kind == "dirac":
                out.append({"type": "dirac", "t": [float(v) for v in rng.uniform(0.0, 1.0, doc.D)]})
            else:
                lo = rng.uniform(0.0, 0.6, doc.D)
                out.append({"type": "box", "lo": [float(v) for v in lo], "hi": [float(v) for v in lo + rng.uniform(0.1, 0.4, doc.D)]})
        return out
    K1, K2 = doc.domain
    for _ in range(count):
        if kind == "dirac":
            out.append({"type": "dirac", "t": [float(rng.uniform(K1.lo, K1.hi)), float(rng.uniform(K2.lo, K2.hi))]})
        else:
            a = np.sort(rng.uniform(K1.lo, K1.hi, 2))
            b = np.sort(rng.uniform(K2.lo, K2.hi, 2))
            out.append({"type": "box", "rect": [float(a[0]), float(a[1]), float(b[0]), float(b[1])]})
    return out


def _random_multi(spec: dict, rng: np.random.Generator, D: int, N: int) -> MultiSpline:
    atoms = []
    for _ in range(int(spec.get("n_atoms", 3))):
        factors = []
        green = rng.integers(0, 2, D).astype(bool)
        green[rng.integers(D)] = True
        for g in green:
            factors.append(GreenFactor(float(rng.uniform())) if g else PolyFactor(int(rng.integers(N))))
        atoms.append(MultiAtom(float(rng.standard_normal()), factors))
    return MultiSpline(D, N, atoms, rng.standard_normal((N,) * D) * float(spec.get("null_scale", 1.0)))


def cmd_simulate(args) -> int:
    raw = _read(args.config)
    seed = int(args.seed if args.seed is not None else raw.get("seed", 0))
    rng = np.random.default_rng(seed)
    raw = dict(raw, seed=seed)
    doc = ProblemDocument.parse(raw)
    if "random_functionals" in raw:
        raw["functionals"] = _random_functionals(raw.pop("random_functionals"), rng, doc)
    if raw.get("ground_truth") is None:
        spec = raw.pop("random_truth", None)
        if spec is None:
            raise CliError("simulate needs ground_truth or random_truth")
        doc = ProblemDocument.parse(raw)
        if doc.multi:
            raw["ground_truth"] = multi_to_record(_random_multi(spec, rng, doc.D, doc.N))
        else:
            o1, o2 = doc.odos
            truth = random_spline(
                rng, o1, o2, int(spec.get("n_tensor", 0)), int(spec.get("n_poly_green", 0)),
                int(spec.get("n_green_poly", 0)), int(spec.get("n_poly_poly", 0)), doc.domain, doc.systems,
            )
            raw["ground_truth"] = spline_to_record(truth)
    doc = ProblemDocument.parse(raw)
    truth = doc.truth()
    if doc.multi:
        clean = multi_apply(truth, doc.functionals)
    else:
        fwd = doc.forward
        require_admissible(fwd.functionals, *doc.odos)
        clean = fwd.apply(truth)
    y = clean + doc.sigma * rng.standard_normal(clean.size) if doc.sigma > 0.0 else clean
    raw["y"] = [float(v) for v in y]
    raw["schema_version"] = SCHEMA_VERSION
    raw["kind"] = "problem"
    path = _write(Path(args.out), "problem.json", dumps(raw))
    print(f"wrote {path} (M={len(y)}, seed={seed})")
    return EXIT_OK


# ---------------------------------------------------------------- solve


def _lambda(raw: dict, scale) -> float:
    if "lambda" in raw:
        return float(raw["lambda"])
    if "lambda_rel" in raw:
        return float(raw["lambda_rel"]) * scale()
    raise CliError("problem document needs lambda or lambda_rel")


def _certification_text(cert: dict) -> str:
    lines = []
    for key in ("sparsity", "localization", "interior", "containment", "duality_gap"):
        if key in cert:
            lines.append(f"{key}: {'PASS' if cert[key] else 'FAIL'}")
    lines.append(f"sparsity_count: {cert['sparsity_count']}")
    lines.append(f"bound: {cert['bound']}")
    lines.append(f"gap: {fmt(cert['gap'])}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    raw = _read(args.config)
    doc = ProblemDocument.parse(raw)
    y = doc.y
    if y is None:
        raise CliError("problem document has no y; run simulate first")
    solver_cfg = dict(raw.get("solver", {}))
    tol = float(args.tol if args.tol is not None else solver_cfg.get("tol", 1e-8))
    max_iter = int(solver_cfg.get("max_iter", 200_000))
    grid_cfg = dict(raw.get("grid", {}))
    if args.grid:
        n2d, n1d = (int(v) for v in _floats(args.grid, 2, "--grid"))
        grid_cfg.update(n2d=n2d, n1d=n1d)
    result_doc = {"schema_version": SCHEMA_VERSION, "kind": "result", "problem": raw}
    if doc.multi:
        points = grid_cfg.get("points")
        grid = MultiGrid.uniform(doc.D, None if points is None else {int(k): int(v) for k, v in points.items()})
        lam = _lambda(raw, lambda: multi_lambda_max(y, doc.functionals, doc.D, doc.N, grid))
        res = multi_solve(y, doc.functionals, lam, doc.D, doc.N, grid, tol=tol, max_iter=max_iter)
        c = res.certification
        cert = {
            "sparsity": c.sparsity_ok,
            "containment": c.containment_ok,
            "duality_gap": c.gap_ok,
            "interior_informational": c.interior_informational,
            "sparsity_count": c.sparsity_count,
            "bound": c.bound,
            "gap": res.duality_gap,
        }
        spline_rec, csv_text, passed = multi_to_record(res.spline), atoms_csv(res.spline), c.passed
        history = [res.objective]
    else:
        base = Problem(y, doc.forward, 1.0, doc.systems)
        grid = GridSpec.uniform(
            doc.domain, int(grid_cfg.get("n2d", 33)), int(grid_cfg.get("n1d", 65)), int(grid_cfg.get("levels", 3))
        )
        lam = _lambda(raw, lambda: lambda_max(base, GridSpec(grid.grid2d, grid.grid1d_axis2, grid.grid1d_axis1, 0)))
        res = solve(base.with_data(y, lam), grid, tol=tol, max_iter=max_iter)
        c = res.certification
        cert = {
            "sparsity": c.sparsity_ok,
            "localization": c.localization_ok,
            "interior": c.interior_ok,
            "duality_gap": c.gap_ok,
            "sparsity_count": c.sparsity_count,
            "bound": c.bound,
            "gap": res.duality_gap,
        }
        if c.offending:
            cert["offending"] = {k: spline_to_record(res.spline.with_atoms(v))["atoms"] for k, v in c.offending.items()}
        spline_rec, csv_text, passed = spline_to_record(res.spline), atoms_csv(res.spline), c.passed
        history = list(res.history)
    result_doc.update(
        {
            "lambda": lam,
            "spline": spline_rec,
            "objective": res.objective,
            "duality_gap": res.duality_gap,
            "iterations": res.iterations,
            "history": history,
            "certification": cert,
        }
    )
    out = Path(args.out)
    _write(out, "result.json", dumps(result_doc))
    _write(out, "atoms.csv", csv_text)
    text = _certification_text(cert)
    _write(out, "certification.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_CERTIFICATION


# ---------------------------------------------------------------- render


def cmd_render(args) -> int:
    raw = _read(args.config)
    if raw.get("kind") != "result":
        raise CliError("render expects a result document")
    doc = ProblemDocument.parse(raw["problem"])
    if doc.multi:
        if doc.D != 2:
            raise CliError("only two-dimensional results can be rendered")
        spline = to_tensor_spline(multi_from_record(raw["spline"], doc.D, doc.N))
    else:
        spline = spline_from_record(raw["spline"], doc.systems, doc.domain)
    window = DEFAULT_WINDOW if args.extended_window is None else _floats(args.extended_window, 4, "--extended-window")
    if not (window[0] < window[1] and window[2] < window[3]):
        raise CliError("--extended-window needs x0 < x1 and y0 < y1")
    res = int(args.resolution)
    if res < 1:
        raise CliError("--resolution must be positive")
    out = Path(args.out)
    a = _write(out, "spline.svg", render_spline(spline, window, res))
    b = _write(out, "decomposition.svg", render_decomposition(spline, window, res))
    print(f"wrote {a}")
    print(f"wrote {b}")
    return EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise CliError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or all")
    seed = int(args.seed or 0)
    ok = True
    for name in names:
        if name == "representer":
            checks = representer_checks(representer_runs(seed, args.instances or 50, args.full_sweep))
        else:
            checks = run_suite(name, seed)
        for c in checks:
            print(c.line())
            ok = ok and c.passed
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vtspline", description="Sparse tensor-product spline regression.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate measurements of a ground-truth spline")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("solve", help="solve, reduce, canonicalize and certify")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=".")
    s.add_argument("--grid", help="n2d,n1d")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("render", help="SVG heatmap and four-family decomposition of a result")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=".")
    s.add_argument("--extended-window", help="x0,x1,y0,y1")
    s.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("verify", help="run property suites")
    s.add_argument("--suite", default="all", help=f"comma-separated from {sorted(SUITES)} or all")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--instances", type=int, help="representer instances per configuration (default 50)")
    s.add_argument("--full-sweep", action="store_true", help="representer: instances for every M")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InadmissibleFunctional as exc:
        print(f"error: {exc.verdict.reason}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssumptionViolation as exc:
        print(f"error: assumption failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DocumentError, RankDeficientNullBlock, SingularGram, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NoConvergence, NumericalStall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
