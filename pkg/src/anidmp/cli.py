"""Command-line interface.

Exit codes: 0 on success, 1 when ``--strict`` is given and a condition or the
maximum principle is violated, 2 on input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .conditions import (check_anisotropic_nonobtuse, check_delaunay_type, dt_bounds_ani,
                         dt_bounds_del, dt_upper_lumped)
from .config import ConfigError, load_config, parse_generator
from .export import export_vtk, format_sig, format_table, table_csv, write_trace_csv
from .integrator import TransientProblem, run, undershoot_report
from .mesh import MeshError, generate_mesh45, generate_mesh135
from .mesh_io import FORMATS, read_mesh, write_mesh
from .problems import RAMP_KINDS, NeedsImportedMesh, example_boundary, reproduce_table, u0_ramp
from .tensor import QUADRATURE_RULES, FieldError, element_tensors, field_from_spec

__all__ = ["main", "cli_main"]


class InputError(Exception):
    pass


def _mesh_from_args(args):
    if getattr(args, "gen", None):
        name, n = parse_generator(args.gen)
        gen = generate_mesh45 if name == "mesh45" else generate_mesh135
        return gen(n, not args.no_hole)
    if getattr(args, "mesh", None):
        if not Path(args.mesh).is_file():
            raise InputError(f"mesh file not found: {args.mesh}")
        return read_mesh(args.mesh, getattr(args, "format", None))
    raise InputError("give --gen GENERATOR:N or --mesh PATH")


def _field_from_arg(text):
    """``example1`` or ``constant:d11,d12,d22``."""
    if text.startswith("constant:"):
        vals = [float(v) for v in text.split(":", 1)[1].split(",")]
        return field_from_spec({"constant": vals})
    return field_from_spec({"builtin": text})


def _add_mesh_args(p, required_field=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--gen", metavar="NAME:N", help="mesh45:N or mesh135:N")
    src.add_argument("--mesh", metavar="PATH", help="mesh file (.msh or native)")
    p.add_argument("--format", choices=FORMATS, help="mesh file format (default: by suffix)")
    p.add_argument("--no-hole", action="store_true", help="generate the full unit square")
    p.add_argument("--field", default="example1", required=False,
                   help="example1|example2|example3 or constant:d11,d12,d22")
    p.add_argument("--quadrature", default="vertex", choices=sorted(QUADRATURE_RULES))
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _cmd_check_mesh(args, out):
    mesh = _mesh_from_args(args)
    t = element_tensors(mesh, _field_from_arg(args.field), args.quadrature)
    ani = check_anisotropic_nonobtuse(mesh, t)
    dl = check_delaunay_type(mesh, t)
    if args.json:
        print(json.dumps({"anoac": ani.to_dict(), "delaunay": dl.to_dict()}), file=out)
    else:
        print(f"anoac: {ani.summary()}; delaunay: {dl.summary()}", file=out)
    return 1 if args.strict and not (ani.satisfied and dl.satisfied) else 0


def _cmd_bounds(args, out):
    mesh = _mesh_from_args(args)
    t = element_tensors(mesh, _field_from_arg(args.field), args.quadrature)
    th = args.theta
    res = {"ani": dt_bounds_ani(mesh, t, th), "del": dt_bounds_del(mesh, t, th),
           "lumped-ani": dt_upper_lumped(mesh, t, th, "ani"),
           "lumped-del": dt_upper_lumped(mesh, t, th, "del")}
    if args.json:
        print(json.dumps({k: v.to_dict() for k, v in res.items()}), file=out)
    else:
        print(f"Δt_Ani={format_sig(res['ani'].lower)}, Δt_Del={format_sig(res['del'].lower)}",
              file=out)
        for b in res.values():
            print(f"  {b.source:<11} lower={format_sig(b.lower):>8}  "
                  f"upper={format_sig(b.upper):>8}  feasible={b.feasible}", file=out)
            for note in b.notes:
                print(f"    note: {note}", file=out)
    bad = not (res["ani"].feasible or res["del"].feasible)
    return 1 if args.strict and bad else 0


def _cmd_run(args, out):
    if not Path(args.config).is_file():
        raise InputError(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    if cfg.mesh_file is not None and not Path(cfg.mesh_file).is_file():
        raise InputError(f"mesh file not found: {cfg.mesh_file}")
    mesh = cfg.build_mesh()
    field = cfg.build_field()
    kind = cfg.initial
    prob = TransientProblem(mesh, field, cfg.theta, cfg.dt, cfg.n_steps,
                            initial=lambda x, y: u0_ramp(x, y, kind),
                            boundary=example_boundary(), lumped=cfg.lumped,
                            quadrature=cfg.quadrature, keep_solutions=False)
    res = run(prob)
    rep = undershoot_report(res)
    summary = {"mesh": mesh.name, "n_vertices": mesh.n_vertices, "n_elements": mesh.n_elements,
               "theta": cfg.theta, "dt": cfg.dt, "n_steps": cfg.n_steps, "lumped": cfg.lumped,
               "u_min": res.u_min, "u_max": res.u_max, "overall_min": res.overall_min,
               "overall_max": res.overall_max, "dmp_ok": res.dmp.ok,
               "undershoot": rep.classification}
    if cfg.trace_csv:
        write_trace_csv(res, cfg.trace_csv)
    if cfg.vtk:
        export_vtk(mesh, res.final, cfg.vtk)
    if cfg.summary_json:
        Path(cfg.summary_json).write_text(json.dumps(summary, indent=2) + "\n")
    if args.json:
        print(json.dumps(summary), file=out)
    else:
        print(f"{mesh!r}", file=out)
        print(f"u_min={format_sig(res.u_min)} u_max={format_sig(res.u_max)} "
              f"(all steps: min {format_sig(res.overall_min)}, max {format_sig(res.overall_max)})",
              file=out)
        print(f"maximum principle: {'holds' if res.dmp.ok else 'violated'}; "
              f"undershoot: {rep.summary()}", file=out)
    return 1 if args.strict and not res.dmp.ok else 0


_TABLE_COLUMNS = ["mesh", "h", "n_elements", "dt_ani", "dt_del", "dt", "u_min", "u_min_lumped"]


def _cmd_reproduce_table(args, out):
    imported = None
    if args.mesh:
        if not Path(args.mesh).is_file():
            raise InputError(f"mesh file not found: {args.mesh}")
        imported = read_mesh(args.mesh, args.format)
    rows = reproduce_table(args.table, theta=args.theta, n_steps=args.steps, ramp=args.ramp,
                           quadrature=args.quadrature, max_n=args.max_n,
                           imported_mesh=imported, include_imported=imported is not None)
    dicts = [r.to_dict() for r in rows]
    cols = _TABLE_COLUMNS if any(r.u_min_lumped is not None for r in rows) else _TABLE_COLUMNS[:-1]
    text = format_table(dicts, cols)
    csv_text = table_csv(dicts, cols)
    print(text, end="", file=out)
    if args.csv:
        Path(args.csv).write_text(csv_text)
    return 0


def _cmd_convert_mesh(args, out):
    if args.gen:
        mesh = _mesh_from_args(args)
    else:
        if not args.input or not Path(args.input).is_file():
            raise InputError(f"input mesh not found: {args.input}")
        mesh = read_mesh(args.input, args.from_format)
    write_mesh(mesh, args.output, args.to_format)
    print(f"wrote {mesh!r} to {args.output}", file=out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="anidmp", description=(
        "Linear finite elements for anisotropic diffusion: mesh conditions, "
        "time-step bounds and maximum-principle checks."))
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-mesh", help="evaluate the two mesh conditions")
    _add_mesh_args(c)
    c.add_argument("--strict", action="store_true")
    c.set_defaults(func=_cmd_check_mesh)

    b = sub.add_parser("bounds", help="admissible time-step intervals")
    _add_mesh_args(b)
    b.add_argument("--theta", type=float, default=1.0)
    b.add_argument("--strict", action="store_true")
    b.set_defaults(func=_cmd_bounds)

    r = sub.add_parser("run", help="run a configured transient problem")
    r.add_argument("config", help="TOML run configuration")
    r.add_argument("--json", action="store_true")
    r.add_argument("--strict", action="store_true")
    r.set_defaults(func=_cmd_run)

    t = sub.add_parser("reproduce-table", help="compute a benchmark table")
    t.add_argument("table", choices=["1", "2", "3", "3-mesh45", "3-imported"])
    t.add_argument("--mesh", metavar="PATH", help="imported mesh for the metric-adapted rows")
    t.add_argument("--format", choices=FORMATS)
    t.add_argument("--theta", type=float, default=1.0)
    t.add_argument("--steps", type=int, default=10)
    t.add_argument("--ramp", choices=RAMP_KINDS, default="radial")
    t.add_argument("--quadrature", default="vertex", choices=sorted(QUADRATURE_RULES))
    t.add_argument("--max-n", type=int, default=None, help="skip grids finer than N cells")
    t.add_argument("--csv", metavar="PATH", help="also write full-precision CSV")
    t.set_defaults(func=_cmd_reproduce_table)

    v = sub.add_parser("convert-mesh", help="convert between mesh formats")
    v.add_argument("input", nargs="?")
    v.add_argument("output")
    v.add_argument("--gen", metavar="NAME:N", help="generate instead of reading input")
    v.add_argument("--no-hole", action="store_true")
    v.add_argument("--from", dest="from_format", choices=FORMATS)
    v.add_argument("--to", dest="to_format", choices=FORMATS)
    v.set_defaults(func=_cmd_convert_mesh)
    return p


def cli_main(argv=None, out=None):
    """Run the CLI and return the exit code instead of exiting."""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (InputError, ConfigError, FieldError, MeshError, NeedsImportedMesh,
            ValueError, OSError) as exc:
        print(f"anidmp: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
