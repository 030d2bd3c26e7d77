"""Command line: ``polyvem mesh gen``, ``polyvem solve`` and ``polyvem conv``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from pathlib import Path

import numpy as np

from .forms import CONVECTION_FORMS, STAB_KINDS, constant_field
from .harness import (
    StudyConfig,
    cell_errors,
    polynomial_case,
    rows_to_csv,
    rows_to_svg,
    run_convergence,
    sine_case,
)
from .mesh import DEFAULT_LLOYD_ITERS, MESH_FAMILIES, MeshError, gen_quad, gen_tria, gen_voronoi, load_mesh, save_mesh
from .system import SolverError, solve_problem


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _on_off(text: str) -> bool:
    t = text.lower()
    if t in ("on", "true", "1", "yes"):
        return True
    if t in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _positive_float(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyvem", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    mesh = sub.add_parser("mesh", help="mesh utilities")
    msub = mesh.add_subparsers(dest="mesh_command", parser_class=_Parser)
    gen = msub.add_parser("gen", help="generate a mesh file")
    gen.add_argument("--type", required=True, choices=MESH_FAMILIES)
    gen.add_argument("--n", type=int, help="cells per side (quad, tria)")
    gen.add_argument("--seeds", type=int, help="number of seeds (voro, rand)")
    gen.add_argument("--lloyd", type=int, default=None, help="Lloyd iterations (voro; rand uses 0)")
    gen.add_argument("--rng", type=int, default=0)
    gen.add_argument("--perturb", type=float, default=0.0, help="vertex jitter for tria")
    gen.add_argument("-o", "--output", required=True)

    solve = sub.add_parser("solve", help="solve one problem on a mesh file")
    solve.add_argument("mesh")
    _problem_flags(solve)
    solve.add_argument("--case", choices=("sine", "poly"), default="sine")
    solve.add_argument("--alpha", default="1,0", help="exponents a,b of u = x^a y^b for --case poly")
    solve.add_argument("--beta", type=_pair, default=None, help="constant beta as bx,by (default: the sine test field)")
    solve.add_argument("--dump", help="write the DoF vector to this file")

    conv = sub.add_parser("conv", help="convergence studies from a key=value config file")
    conv.add_argument("config", nargs="?")
    conv.add_argument("--family")
    conv.add_argument("--levels")
    conv.add_argument("--k")
    conv.add_argument("--eps")
    conv.add_argument("--form")
    conv.add_argument("--supg")
    conv.add_argument("--stab")
    conv.add_argument("--tau-safety")
    conv.add_argument("--rng")
    conv.add_argument("--lloyd")
    conv.add_argument("--tol")
    conv.add_argument("--out", help="output directory (default: current)")
    conv.add_argument("--svg", action="store_true", help="also write an SVG plot per study")
    return p


def _problem_flags(p):
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eps", type=_positive_float, default=1e-3)
    p.add_argument("--form", choices=CONVECTION_FORMS, default="bounSkew")
    p.add_argument("--supg", type=_on_off, default=True)
    p.add_argument("--stab", choices=STAB_KINDS, default="dofiDofi")
    p.add_argument("--tau-safety", type=float, default=0.5)
    p.add_argument("--tol", type=_positive_float, default=1e-12)


# ------------------------------------------------------------------ mesh


def cmd_mesh(args) -> int:
    if args.mesh_command != "gen":
        raise UsageError("polyvem mesh: expected the 'gen' subcommand")
    if args.type in ("quad", "tria"):
        if args.n is None or args.n < 1:
            raise UsageError("--n must be a positive integer for quad and tria meshes")
        mesh = gen_quad(args.n) if args.type == "quad" else gen_tria(args.n, args.perturb, args.rng)
    else:
        if args.seeds is None or args.seeds < 1:
            raise UsageError("--seeds must be a positive integer for voro and rand meshes")
        if args.lloyd is not None and args.lloyd < 0:
            raise UsageError("--lloyd must be non-negative")
        if args.type == "rand":
            lloyd = 0
        else:
            lloyd = DEFAULT_LLOYD_ITERS if args.lloyd is None else args.lloyd
        mesh = gen_voronoi(args.seeds, lloyd, args.rng)
    save_mesh(mesh, args.output)
    print(f"wrote {args.output}: {mesh.n_vertices} vertices, {mesh.n_edges} edges, {mesh.n_cells} cells")
    return 0


# ----------------------------------------------------------------- solve


def cmd_solve(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if not 0 < args.tau_safety <= 1:
        raise UsageError("--tau-safety must lie in (0, 1]")
    mesh = load_mesh(args.mesh)
    beta = constant_field(*args.beta) if args.beta else None
    if args.case == "poly":
        try:
            alpha = tuple(int(v) for v in args.alpha.split(","))
        except ValueError:
            raise UsageError(f"--alpha expects two integers, got {args.alpha!r}") from None
        if len(alpha) != 2 or min(alpha) < 0:
            raise UsageError(f"--alpha expects two non-negative integers, got {args.alpha!r}")
        case = polynomial_case(alpha, args.eps, beta or constant_field(1.0, 2.0))
    else:
        case = sine_case(args.eps, beta) if beta else sine_case(args.eps)
    spec = case.spec(convection_form=args.form, supg_enabled=args.supg, stab_kind=args.stab, tau_safety=args.tau_safety)
    system = solve_problem(mesh, args.k, spec, args.tol)
    errs = cell_errors(mesh, args.k, system.solution, case, spec)
    print(f"ndofs {system.n_global}")
    print(f"eH1 {errs.e_h1:.6e}")
    print(f"eC {errs.e_c:.6e}")
    print(f"residual {system.residual:.3e}")
    if args.dump:
        np.savetxt(args.dump, system.solution, fmt="%.17g")
    return 0


# ------------------------------------------------------------------ conv

_CONFIG_KEYS = {
    "family": "family",
    "levels": "levels",
    "k": "k",
    "eps": "epsilon",
    "epsilon": "epsilon",
    "form": "form",
    "supg": "supg",
    "stab": "stab",
    "tau_safety": "tau_safety",
    "rng": "rng_seed",
    "rng_seed": "rng_seed",
    "lloyd": "lloyd_iters",
    "tol": "tol",
    "out": "out",
}


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _convert(field: str, value: str):
    if field == "k" or field == "rng_seed" or field == "lloyd_iters":
        return int(value)
    if field in ("epsilon", "tau_safety", "tol"):
        return float(value)
    if field == "supg":
        return _on_off(value)
    return value


def expand_configs(entries: dict[str, str]) -> list[StudyConfig]:
    """Cartesian product over comma separated values; ``levels`` is one ladder."""
    fields = {}
    for key, value in entries.items():
        name = _CONFIG_KEYS[key]
        if name == "out":
            continue
        if name == "levels":
            fields[name] = [tuple(int(v) for v in value.split(","))]
        else:
            fields[name] = [_convert(name, v.strip()) for v in value.split(",") if v.strip()]
        if not fields[name]:
            raise UsageError(f"config key {key!r} has no value")
    names = list(fields)
    configs = []
    for combo in itertools.product(*(fields[n] for n in names)):
        kw = dict(zip(names, combo))
        configs.append(StudyConfig(**kw))
    return configs


def cmd_conv(args) -> int:
    entries: dict[str, str] = {}
    if args.config:
        entries.update(parse_config(Path(args.config).read_text()))
    for flag in ("family", "levels", "k", "eps", "form", "supg", "stab", "tau_safety", "rng", "lloyd", "tol"):
        value = getattr(args, flag)
        if value is not None:
            entries[flag] = value
    if not entries:
        raise UsageError("polyvem conv: empty configuration")
    try:
        configs = expand_configs(entries)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"polyvem conv: {exc}") from None
    out = Path(args.out or entries.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    failed = False
    for cfg in configs:
        path = out / f"{cfg.name}.csv"
        rows = []

        def flush(row, path=path, rows=rows):
            rows.append(row)
            path.write_text(rows_to_csv(rows))

        result = run_convergence(cfg, on_row=flush)
        if args.svg:
            (out / f"{cfg.name}.svg").write_text(rows_to_svg(result.rows, cfg.name))
        bad = [r for r in result.rows if r.failure]
        for r in bad:
            print(f"{cfg.name}: level {r.level} failed: {r.failure}", file=sys.stderr)
        failed |= bool(bad)
        print(f"{cfg.name}: rate eH1 {result.rate('e_h1'):.3f}  rate eC {result.rate('e_c'):.3f}  -> {path}")
    return 2 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        handler = {"mesh": cmd_mesh, "solve": cmd_solve, "conv": cmd_conv}[args.command]
        return handler(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (MeshError, SolverError, OSError, ValueError) as exc:
        print(f"polyvem: {exc}", file=sys.stderr)
        return 2
