"""``lattice-spec`` command line: one subcommand per operation, JSON or CSV on stdout.

Exit codes: 0 success, 1 numerical failure (a partial record is still
printed), 2 usage or domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import green, oracle, simon_wolff, solver
from .config import config_from_env
from .errors import BracketFailure, DomainError, IterationLimit, NonConvergence

SCHEMA_VERSION = "1"
NUMERICAL_FAILURES = (NonConvergence, IterationLimit, BracketFailure)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    return obj


def to_json(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    obj = _plain(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, list):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    return json.dumps(obj, ensure_ascii=False)


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return format_float(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ";".join(_cell(x) for x in v)
    if isinstance(v, dict):
        return to_json(v)
    return str(v)


def to_csv(record: dict) -> str:
    """Header plus data rows (RFC 4180). Tabular results use their ``rows``."""
    results = record["results"]
    rows = results.get("rows") if isinstance(results, dict) else None
    if rows is None:
        rows = [results]
    header = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def make_record(command, inputs, results, diagnostics) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "inputs": inputs,
            "results": results, "diagnostics": diagnostics}


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _coupling(text, d, cfg) -> float:
    if text is None:
        raise UsageError("--coupling is required")
    if text.strip().lower() == "critical":
        return solver.critical_coupling(d, cfg).v_c
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--coupling expects a number or 'critical', got {text!r}") from None


def _green_entry(gv):
    return {"kind": gv.kind, "value": gv.value, "err_estimate": gv.err_estimate,
            "divergence_exponent": gv.divergence_exponent, "method": gv.method}


def _energy_or_coupling(args, cfg):
    if args.energy is not None:
        return args.energy, None
    v = _coupling(args.coupling, args.dim, cfg)
    sol = solver.eigenvalue(args.dim, v, cfg)
    if sol is None:
        raise DomainError(f"no eigenvalue for d={args.dim}, v={v}")
    return sol.E, v


# ---------------------------------------------------------------------------
# subcommands: each returns (inputs, results, diagnostics)
# ---------------------------------------------------------------------------

def cmd_green(args, cfg):
    gi = green.greens_I(args.dim, args.energy, cfg)
    gj = green.greens_J(args.dim, args.energy, cfg)
    results = {"I": gi.value, "J": gj.value, "I_kind": gi.kind, "J_kind": gj.kind}
    return {"energy": args.energy}, results, [{"I": _green_entry(gi)}, {"J": _green_entry(gj)}]


def cmd_vc(args, cfg):
    cc = solver.critical_coupling(args.dim, cfg)
    method = "analytic" if cc.v_c == 0 else "quadrature"
    return {}, {"v_c": cc.v_c}, [{"err_estimate": cc.err_estimate, "method": method}]


def _solution_results(sol):
    if sol is None:
        return {"E": None, "kind": "none", "weight": None}
    return {"E": sol.E, "kind": sol.kind, "weight": sol.weight}


def cmd_eigenvalue(args, cfg):
    v = _coupling(args.coupling, args.dim, cfg)
    sol = solver.eigenvalue(args.dim, v, cfg)
    diag = [] if sol is None else [{"residual": sol.residual, **sol.diagnostics}]
    return {"coupling": v}, _solution_results(sol), diag


def cmd_coupling_for_energy(args, cfg):
    v = solver.coupling_for_energy(args.dim, args.energy, cfg)
    return {"energy": args.energy}, {"v": v}, []


def cmd_eigenvector(args, cfg):
    E, v = _energy_or_coupling(args, cfg)
    rows = []
    for k in range(args.max_site + 1):
        site = (k,) + (0,) * (args.dim - 1)
        rows.append({"site": k, "psi": solver.eigenvector_position(args.dim, E, site, cfg)})
    return {"energy": E, "coupling": v, "max_site": args.max_site}, {"E": E, "rows": rows}, []


def cmd_weight(args, cfg):
    E, v = _energy_or_coupling(args, cfg)
    return {"energy": E, "coupling": v}, {"weight": solver.point_mass_weight(args.dim, E, cfg)}, []


def _classify_results(rep):
    return {"pp": [p.E for p in rep.pp], "pp_kind": [p.kind for p in rep.pp],
            "regime": rep.regime, "sc": "empty" if rep.sc_empty else "nonempty",
            "ac": list(rep.ac_interval), "ess": list(rep.ess_interval), "v_c": rep.v_c}


def cmd_classify(args, cfg):
    v = _coupling(args.coupling, args.dim, cfg)
    rep = solver.classify_spectrum(args.dim, v, cfg)
    return {"coupling": v}, _classify_results(rep), []


def cmd_dos(args, cfg):
    val = simon_wolff.dos(args.dim, args.x, cfg)
    return {"x": args.x}, {"rho": val.rho, "singular": val.singular}, []


def cmd_im_resolvent(args, cfg):
    if args.eps is not None:
        val = simon_wolff.im_resolvent(args.dim, args.x, args.eps, cfg)
        return {"x": args.x, "eps": args.eps}, {"im": val}, []
    lad = simon_wolff.im_ladder(args.dim, args.x, cfg)
    results = {"im_limit": lad.limit, "err_estimate": lad.err_estimate}
    return {"x": args.x}, results, [{"eps": list(lad.eps), "values": list(lad.values)}]


def cmd_sw_report(args, cfg):
    rep = simon_wolff.sc_evidence_report(args.dim, args.grid_size, cfg, margin=args.margin,
                                         energy=args.energy, threads=cfg.threads)
    rows = [p.to_dict() for p in rep.points]
    results = {"finding": rep.finding, "z_points": rep.z_points, "rows": rows}
    return ({"grid_size": args.grid_size, "margin": args.margin, "energy": args.energy},
            results, [{"violations": rep.violations}])


def cmd_oracle(args, cfg):
    v = _coupling(args.coupling, args.dim, cfg)
    Ns = [int(n) for n in args.Ns.split(",") if n.strip()]
    sol = solver.eigenvalue(args.dim, v, cfg)
    E = sol.E if sol is not None else None
    table = oracle.convergence_study(args.dim, v, Ns, args.bc, args.oracle_tol, E_analytic=E)
    inputs = {"coupling": v, "Ns": Ns, "bc": args.bc, "oracle_tol": args.oracle_tol}
    return inputs, {"E_analytic": E, "rows": table.to_records()}, []


def theorem_rows(cfg):
    """Every branch of the bound-state theorem for ``d = 1..6``."""
    rows = []
    for d in range(1, 7):
        vc = solver.critical_coupling(d, cfg).v_c
        cases = [("zero", 0.0), ("weak", 0.5), ("strong", 2.0)] if d <= 2 else \
            [("subcritical", 0.5 * vc), ("critical", vc), ("supercritical", 2.0 * vc)]
        for label, v in cases:
            rep = solver.classify_spectrum(d, v, cfg)
            pp = rep.pp[0] if rep.pp else None
            rows.append({"dim": d, "case": label, "v": v, "v_c": vc, "regime": rep.regime,
                         "E": pp.E if pp else None, "kind": pp.kind if pp else "none",
                         "weight": pp.weight if pp else None,
                         "J_finite_at_edge": green.integrability_class(d, 1.0).J_finite})
    return rows


def cmd_theorem_table(args, cfg):
    return {}, {"rows": theorem_rows(cfg)}, []


COMMANDS = {
    "green": cmd_green,
    "vc": cmd_vc,
    "eigenvalue": cmd_eigenvalue,
    "coupling-for-energy": cmd_coupling_for_energy,
    "eigenvector": cmd_eigenvector,
    "weight": cmd_weight,
    "classify": cmd_classify,
    "dos": cmd_dos,
    "im-resolvent": cmd_im_resolvent,
    "sw-report": cmd_sw_report,
    "oracle": cmd_oracle,
    "theorem-table": cmd_theorem_table,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(default):
    p = _Parser(add_help=False)
    p.add_argument("--dim", type=int, default=default("dim"))
    p.add_argument("--tol", type=float, default=default("tol"))
    p.add_argument("--format", choices=("json", "csv"), default=default("format"))
    p.add_argument("--threads", type=int, default=default("threads"))
    p.add_argument("--quadrature", choices=("auto", "direct", "laplace"), default=default("quadrature"))
    return p


def build_parser() -> argparse.ArgumentParser:
    top = _global_flags(lambda k: {"format": "json", "quadrature": "auto"}.get(k))
    # flags repeated after the subcommand do not reset those given before it
    sub_flags = _global_flags(lambda k: argparse.SUPPRESS)
    parser = _Parser(prog="lattice-spec", parents=[top],
                     description="Spectral analysis of a single-site impurity on the cubic lattice.")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return subs.add_parser(name, parents=[sub_flags], help=help_)

    add("green", "Green's integrals I and J").add_argument("--energy", type=float, required=True)
    add("vc", "critical coupling")
    add("eigenvalue", "bound-state energy").add_argument("--coupling", required=True)
    add("coupling-for-energy", "coupling producing a given energy").add_argument(
        "--energy", type=float, required=True)
    for name, help_ in (("eigenvector", "position-space eigenvector along an axis"),
                        ("weight", "spectral mass of the eigenvalue")):
        p = add(name, help_)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--energy", type=float)
        g.add_argument("--coupling")
        if name == "eigenvector":
            p.add_argument("--max-site", type=int, default=10)
    add("classify", "full spectral report").add_argument("--coupling", required=True)
    add("dos", "density of states").add_argument("--x", type=float, required=True)
    p = add("im-resolvent", "imaginary part of the free resolvent")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--eps", type=float, default=None,
                   help="single shift; omitted means extrapolate to zero")
    p = add("sw-report", "X/Y/Z classification on a grid")
    p.add_argument("--grid-size", type=int, default=101)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--energy", type=float, default=None)
    p = add("oracle", "finite-box convergence study")
    p.add_argument("--coupling", required=True)
    p.add_argument("--Ns", required=True, help="comma-separated half widths")
    p.add_argument("--bc", choices=oracle.BOUNDARY_CONDITIONS, default=oracle.DIRICHLET)
    p.add_argument("--oracle-tol", type=float, default=1e-10)
    add("theorem-table", "all branches of the bound-state theorem for d=1..6")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command != "theorem-table" and args.dim is None:
            raise UsageError("--dim is required")
        if args.dim is not None and args.dim < 1:
            raise UsageError("--dim must be >= 1")
        cfg = config_from_env(rel_tol=args.tol, threads=args.threads, backend=args.quadrature)
        if cfg.threads is None:
            cfg = config_from_env(rel_tol=args.tol, threads=os.cpu_count() or 1,
                                  backend=args.quadrature)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=stderr)
        print(str(exc), file=stderr)
        return 2
    except ValueError as exc:
        print(f"lattice-spec: {exc}", file=stderr)
        return 2

    inputs = {"dim": args.dim, "tol": cfg.rel_tol, "quadrature": cfg.backend}
    skip = {"command", "dim", "tol", "format", "threads", "quadrature"}
    inputs.update({k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None})
    code = 0
    try:
        extra, results, diagnostics = COMMANDS[args.command](args, cfg)
        inputs.update(extra)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return 2
    except DomainError as exc:
        print(f"lattice-spec {args.command}: {exc}", file=stderr)
        return 2
    except NUMERICAL_FAILURES as exc:
        code = 1
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "diagnostics", None):
            diag.update(exc.diagnostics)
        last = getattr(exc, "last", None)
        if last is not None:
            diag.update(lam=last.lam, residual=last.residual)
        results, diagnostics = {}, [diag]
    record = make_record(args.command, inputs, results, diagnostics)
    text = to_csv(record) if args.format == "csv" else to_json(record) + "\n"
    stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
