"""Command-line verification suites.

Exit codes: 0 when every assertion of the suite holds, 1 when one fails,
2 for usage errors and 3 for runtime or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import amz, polyid
from .covering import DEFAULT_ETAS, Method, covering_estimate, h_covering_bound
from .derivatives import coderivative_f, coderivative_g, jacobian_batch
from .errors import ConfigError, DomainError, NoConvergence
from .mappings import MapId
from .oracles import fd_jacobian_batch, origin_certificate_f, origin_certificate_g, origin_chain_f, probe_origin_f
from .sampling import child_rng

log = logging.getLogger("coderiv")

COMMANDS = ("verify-jacobians", "probe-origin", "covering", "identities", "solve", "sweep")

CSV_COLUMNS = {
    "verify-jacobians": ["map", "n_points", "fd_step", "max_abs_error", "tol", "pass"],
    "probe-origin": ["case", "hypothesis", "schedule", "closed_form", "limit", "converged", "alternate_limit"],
    "covering": ["center", "estimate", "expected", "bound", "pass"],
    "identities": ["identity", "holds", "mutant_holds", "numeric_gap"],
    "solve": ["s", "sigma1", "sigma2", "residual", "distance", "bound", "bound_satisfied", "iterations",
              "converged"],
    "sweep": ["s", "sigma1", "sigma2", "residual", "distance", "bound", "bound_satisfied", "iterations",
              "converged"],
}

EPILOG = "CSV columns per command:\n" + "\n".join(
    f"  {cmd}: {','.join(cols)}" for cmd, cols in CSV_COLUMNS.items()
) + "\n\nExit codes: 0 pass, 1 failed assertion, 2 usage error, 3 runtime or I/O error."


@dataclass
class RunConfig:
    command: str
    map: MapId = MapId.F2
    points: list[np.ndarray] = field(default_factory=list)
    seed: int = 0
    etas: tuple[float, ...] = DEFAULT_ETAS
    y_samples: int = 512
    z_samples: int = 512
    method: Method = Method.SPECTRAL
    fd_step: float = 1e-5
    tol: float | None = None
    scenario: str | None = None
    s: float | None = None
    s_grid: np.ndarray | None = None
    alpha: float | None = None
    output: str | None = None
    format: str = "json"
    random_centers: int = 0
    samples: int = 1000
    y: np.ndarray | None = None
    x: np.ndarray | None = None


# -- argument parsing -------------------------------------------------------------


def _floats(text: str) -> np.ndarray:
    vals = np.array([float(t) for t in text.split(",")])
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite coordinate")
    return vals


def _default_seed() -> int:
    return int(os.environ.get("CODERIV_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default $CODERIV_SEED or 0)")
    common.add_argument("--tol", type=float, default=None, help="assertion tolerance")
    common.add_argument("--output", default=None, help="report path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    mapped = argparse.ArgumentParser(add_help=False)
    mapped.add_argument("--map", choices=("f", "g", "h"), default="f")
    mapped.add_argument("--point", action="append", default=[], help="x1,x2[,x3,x4]; repeatable")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", required=True, help="scenario file, or a built-in name (rotation, scaled)")
    scen.add_argument("--alpha", type=float, default=None, help="override the scenario's alpha")

    p = argparse.ArgumentParser(prog="coderiv", description=__doc__, epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    kw = dict(epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)

    vj = sub.add_parser("verify-jacobians", parents=[common, mapped], help="analytic vs finite-difference Jacobians", **kw)
    vj.add_argument("--fd-step", type=float, default=1e-5)
    vj.add_argument("--samples", type=int, default=1000, help="random points when no --point is given")

    po = sub.add_parser("probe-origin", parents=[common], help="directional quotients at the origin of f or g", **kw)
    po.add_argument("--map", choices=("f", "g"), default="f")
    po.add_argument("--y", default="1,0", help="dual vector")
    po.add_argument("--x", default=None, help="candidate coderivative element (default origin)")

    cv = sub.add_parser("covering", parents=[common, mapped], help="covering-constant estimates", **kw)
    cv.add_argument("--etas", default=None, help="comma-separated decreasing radii")
    cv.add_argument("--y-samples", type=int, default=512)
    cv.add_argument("--z-samples", type=int, default=512)
    cv.add_argument("--method", choices=("spectral", "definitional"), default="spectral")
    cv.add_argument("--random-centers", type=int, default=0, help="add N seeded random centres")

    sub.add_parser("identities", parents=[common], help="exact polynomial identities", **kw)

    so = sub.add_parser("solve", parents=[common, scen], help="solve the coincidence equation at one s", **kw)
    so.add_argument("--s", type=float, required=True)

    sw = sub.add_parser("sweep", parents=[common, scen], help="solve over a parameter grid", **kw)
    sw.add_argument("--s-grid", default=None, help="a:b:step (default s_min:s_max in 10 steps)")
    return p


def parse_args(argv=None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        seed = _default_seed() if ns.seed is None else ns.seed
    except ValueError:
        parser.error("CODERIV_SEED must be an integer")
    if not 0 <= seed < 2**64:
        parser.error("seed must fit in 64 unsigned bits")
    cfg = RunConfig(command=ns.command, seed=seed, tol=ns.tol, output=ns.output, format=ns.format)
    if cfg.tol is not None and not cfg.tol > 0:
        parser.error("--tol must be positive")

    if hasattr(ns, "map"):
        cfg.map = MapId.parse(ns.map)
    for text in getattr(ns, "point", []) or []:
        try:
            pt = _floats(text)
        except ValueError:
            parser.error(f"malformed point {text!r}")
        if pt.size != cfg.map.dim:
            parser.error(f"--point {text!r} has {pt.size} coordinates; map {ns.map} needs {cfg.map.dim}")
        cfg.points.append(pt)

    if ns.command == "verify-jacobians":
        cfg.fd_step, cfg.samples = ns.fd_step, ns.samples
        if not cfg.fd_step > 0 or cfg.samples < 1:
            parser.error("--fd-step and --samples must be positive")
    elif ns.command == "probe-origin":
        try:
            cfg.y = _floats(ns.y)
            cfg.x = np.zeros(cfg.map.dim) if ns.x is None else _floats(ns.x)
        except ValueError:
            parser.error("malformed --x or --y")
        if cfg.y.size != cfg.map.dim or cfg.x.size != cfg.map.dim:
            parser.error(f"--x and --y need {cfg.map.dim} coordinates")
    elif ns.command == "covering":
        cfg.y_samples, cfg.z_samples = ns.y_samples, ns.z_samples
        cfg.method = Method(ns.method)
        cfg.random_centers = ns.random_centers
        if ns.etas is not None:
            try:
                cfg.etas = tuple(_floats(ns.etas))
            except ValueError:
                parser.error("malformed --etas")
        if cfg.y_samples < 32 or cfg.z_samples < 32:
            parser.error("sample counts must be at least 32")
        if min(cfg.etas) <= 0 or any(b >= a for a, b in zip(cfg.etas, cfg.etas[1:])):
            parser.error("--etas must be positive and strictly decreasing")
        if cfg.random_centers < 0:
            parser.error("--random-centers must be nonnegative")
        if not cfg.points and not cfg.random_centers:
            parser.error("give --point or --random-centers")
    elif ns.command in ("solve", "sweep"):
        cfg.scenario, cfg.alpha = ns.scenario, ns.alpha
        if ns.command == "solve":
            cfg.s = ns.s
            if not math.isfinite(cfg.s):
                parser.error("--s must be finite")
        elif ns.s_grid is not None:
            try:
                cfg.s_grid = amz.parse_s_grid(ns.s_grid)
            except ConfigError as exc:
                parser.error(str(exc))
        if cfg.alpha is not None and not 0 < cfg.alpha < 1:
            parser.error("--alpha must lie in (0, 1)")
        try:
            sc = amz.load_scenario(cfg.scenario)
        except OSError:
            sc = None  # reported as an I/O error by run()
        except ConfigError as exc:
            parser.error(f"scenario: {exc}")
        if sc is not None:
            alpha = sc.alpha if cfg.alpha is None else cfg.alpha
            if sc.beta >= alpha:
                parser.error(f"beta ({sc.beta}) must be below alpha ({alpha})")
    return cfg


# -- deterministic output ---------------------------------------------------------


def _num(v) -> str:
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def to_json(obj) -> str:
    """Compact JSON with every float written to 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        s = _num(v)
        return "" if s == "null" else s
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_csv_cell(x) for x in v)
    return str(v)


def to_csv(command: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = CSV_COLUMNS[command]
    w.writerow(cols)
    for row in rows:
        w.writerow([_csv_cell(row.get(c)) for c in cols])
    return buf.getvalue()


# -- suites ------------------------------------------------------------------------


def _sample_points(map_id: MapId, n: int, rng) -> np.ndarray:
    """Points with norm uniform in [0.1, 10] and uniform direction."""
    d = rng.standard_normal((n, map_id.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(0.1, 10.0, n)[:, None]


def _suite_jacobians(cfg: RunConfig):
    tol = 1e-6 if cfg.tol is None else cfg.tol
    pts = np.array(cfg.points) if cfg.points else _sample_points(cfg.map, cfg.samples, child_rng(cfg.seed, 1))
    if np.any(np.all(pts == 0, axis=1)):
        raise DomainError("the Jacobians do not exist at the origin")
    err = np.abs(jacobian_batch(cfg.map, pts) - fd_jacobian_batch(cfg.map, pts, cfg.fd_step))
    per = err.reshape(len(pts), -1).max(axis=1)
    worst = int(np.argmax(per))
    row = {"map": cfg.map.value, "n_points": len(pts), "fd_step": cfg.fd_step,
           "max_abs_error": float(per[worst]), "worst_point": pts[worst], "tol": tol,
           "pass": bool(per[worst] <= tol)}
    return {"command": cfg.command, "seed": cfg.seed, "results": [row]}, [row], row["pass"]


def _suite_origin(cfg: RunConfig):
    from .oracles import ORIGIN_CASES

    tol = 1e-3 if cfg.tol is None else cfg.tol
    x, y = cfg.x, cfg.y
    if cfg.map is MapId.F2:
        analytic = coderivative_f(np.zeros(2), y)
        cert = origin_certificate_f(x, y)
        block, fx, fy = 0, x, y
        chain = origin_chain_f(y)
    else:
        analytic = coderivative_g(np.zeros(4), y)
        found = origin_certificate_g(x, y)
        block, cert = found if found is not None else (None, None)
        k = 0 if block is None else block
        fx, fy = x[k : k + 2], y[k : k + 2]
        chain = None if np.all(y == 0) else "block reduction"
    probes = probe_origin_f(fx, fy)
    rows = []
    for case, p in zip(ORIGIN_CASES, probes):
        rows.append({"case": p.case, "hypothesis": case.hypothesis, "schedule": case.schedule,
                     "closed_form": p.closed_form, "limit": p.probe.extrapolated_limit,
                     "converged": p.probe.converged,
                     "alternate_limit": None if p.alternate is None else p.alternate.extrapolated_limit})
    # closed forms and numeric limits must agree, and a positive limit must
    # exist exactly when the coderivative is empty
    agree = all(abs(r["limit"] - r["closed_form"]) <= tol for r in rows)
    if analytic.is_empty:
        consistent = cert is not None
        verdict = "EMPTY-consistent" if consistent else "EMPTY-inconsistent"
    else:
        consistent = cert is None or not np.allclose(x, 0)
        verdict = "SINGLETON-consistent" if consistent else "SINGLETON-inconsistent"
    report = {
        "command": cfg.command, "map": cfg.map.value, "x": x, "y": y,
        "analytic": analytic.kind.value, "chain_failure": chain,
        "certificate_case": None if cert is None else cert.case,
        "certificate_block": block,
        "quotient_limit": None if cert is None else cert.probe.extrapolated_limit,
        "verdict": verdict, "probes": rows, "pass": bool(agree and consistent),
    }
    return report, rows, report["pass"]


def _random_centers(map_id: MapId, n: int, seed: int) -> list[np.ndarray]:
    """Seeded centres in [-10, 10]^d, led by the origin (f) or the degenerate
    zero-block points (g) and the axis points."""
    dim = map_id.dim
    fixed = []
    if map_id is MapId.F2:
        fixed.append(np.zeros(2))
    else:
        fixed += [np.array([0.0, 0.0, 1.0, -2.0]), np.array([3.0, 0.5, 0.0, 0.0])]
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        fixed += [e, -2.5 * e]
    rng = child_rng(seed, 2)
    rand = list(rng.uniform(-10, 10, (max(n - len(fixed), 0), dim)))
    return (fixed + rand)[:n]


def _suite_covering(cfg: RunConfig):
    tol = 1e-6 if cfg.tol is None else cfg.tol
    centers = list(cfg.points) + _random_centers(cfg.map, cfg.random_centers, cfg.seed)
    rows = []
    ok = True
    for i, c in enumerate(centers):
        est = covering_estimate(cfg.map, c, cfg.etas, cfg.y_samples, cfg.z_samples, cfg.method, seed=cfg.seed + i)
        bound = expected = None
        if cfg.map is MapId.H4:
            bound = h_covering_bound(c) if np.any(c != 0) else None
            passed = bound is None or est.estimate <= bound + tol
        else:
            expected = 1.0
            passed = abs(est.estimate - 1.0) <= tol
        ok &= passed
        rows.append({"center": c, "estimate": est.estimate, "expected": expected, "bound": bound,
                     "inf_per_eta": est.inf_per_eta, "pass": bool(passed)})
    report = {"command": cfg.command, "map": cfg.map.value, "method": cfg.method.value, "seed": cfg.seed,
              "etas": cfg.etas, "tol": tol, "results": rows, "pass": bool(ok)}
    return report, rows, ok


def _suite_identities(cfg: RunConfig):
    sides = {"prop34": polyid.prop34_sides, "thm46": polyid.thm46_sides, "h_norm": polyid.h_norm_sides}
    rows = []
    for name, build in sides.items():
        lhs, rhs = build()
        mlhs, mrhs = build(mutate=True)
        rows.append({"identity": name, "holds": (lhs - rhs).is_zero(), "mutant_holds": (mlhs - mrhs).is_zero(),
                     "numeric_gap": polyid.numeric_agreement(lhs, rhs, seed=cfg.seed)})
    ok = all(r["holds"] and not r["mutant_holds"] for r in rows)
    report = {"command": cfg.command, **{r["identity"]: r["holds"] for r in rows}, "results": rows, "pass": ok}
    return report, rows, ok


def _report_row(rep: amz.SolveReport) -> dict:
    d = rep.as_dict()
    sig = d.pop("sigma")
    d["sigma1"], d["sigma2"] = (None, None) if sig is None else sig
    return d


def _suite_solver(cfg: RunConfig):
    sc = amz.load_scenario(cfg.scenario)
    if cfg.alpha is not None:
        sc = sc.with_alpha(cfg.alpha)
    amz.validate_scenario(sc, seed=cfg.seed)
    amz.lipschitz_estimate(sc, seed=cfg.seed)
    if cfg.command == "solve":
        reports = [amz.solve_parametric(sc, cfg.s)]
    else:
        grid = cfg.s_grid
        if grid is None:
            grid = np.linspace(sc.s_min, sc.s_max, 11)
        reports = amz.sweep(sc, grid)
    rows = [_report_row(r) for r in reports]
    ok = all(amz.verify_bound(r, sc) for r in reports if r.converged)
    return None, rows, ok


SUITES = {
    "verify-jacobians": _suite_jacobians,
    "probe-origin": _suite_origin,
    "covering": _suite_covering,
    "identities": _suite_identities,
    "solve": _suite_solver,
    "sweep": _suite_solver,
}


def render(cfg: RunConfig, report, rows) -> str:
    if cfg.format == "csv":
        return to_csv(cfg.command, rows)
    if report is None:  # JSON lines, one object per s
        return "".join(to_json(r) + "\n" for r in rows)
    return to_json(report) + "\n"


def run(cfg: RunConfig) -> int:
    try:
        report, rows, ok = SUITES[cfg.command](cfg)
        text = render(cfg, report, rows)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            sys.stdout.write(text)
    except NoConvergence as exc:
        print(f"coderiv: no convergence (s outside the solvable neighbourhood): {exc}", file=sys.stderr)
        return 3
    except (OSError, ConfigError, DomainError, ValueError) as exc:
        print(f"coderiv: {exc}", file=sys.stderr)
        return 3
    return 0 if ok else 1


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CODERIV_LOG", "WARNING"))
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
