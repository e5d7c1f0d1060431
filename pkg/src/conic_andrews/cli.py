"""Command-line front end: ``conic-andrews {build,verify,converge,regularity,report}``."""

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .geometry import manifold_to_dict
from .library import validate_manifold
from .runner import (TASKS, ExperimentConfig, build_from_spec, convergence_study,
                     emit_plot_data, parse_preset, run)
from .spectral import (dyadic_samples, estimate_holder_exponent, graded_grid,
                       indicial_roots, regularity_exponent, solve_radial_mode,
                       sphere_eigenvalue)

DEFAULT_GRIDS = [501, 1001, 2001]


def _grids(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid list {text!r}")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--grids", type=_grids, help="comma-separated radial node counts")
    common.add_argument("--lmax", type=int, help="highest spherical-harmonic degree")
    common.add_argument("--preset", help="round_sphere, hemisphere, cap, football, "
                        "perturbed_sphere (extra key=value pairs allowed)")
    common.add_argument("--beta", type=float, help="cone coefficient")
    common.add_argument("--dim", type=int, help="dimension n")
    common.add_argument("--json", action="store_true", help="print JSON to stdout")
    common.add_argument("--quiet", action="store_true", help="suppress text output")

    p = argparse.ArgumentParser(prog="conic-andrews",
                                description="Sharp Ric^-1 eigenvalue bound experiments")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("build", parents=[common], help="build a manifold and write its data")
    v = sub.add_parser("verify", parents=[common], help="run the configured checks")
    v.add_argument("--tasks", help=f"comma-separated subset of {','.join(TASKS)}")
    c = sub.add_parser("converge", parents=[common], help="convergence order study")
    c.add_argument("--quantity", choices=["eigen", "poisson"], default="eigen")
    sub.add_parser("regularity", parents=[common], help="cone-tip exponents and Hoelder class")
    sub.add_parser("report", parents=[common], help="run checks and emit plots")
    return p


def _config(args, tasks=None):
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        spec = parse_preset(args.preset or "round_sphere")
        if args.dim is not None:
            spec["n"] = args.dim
        if args.beta is not None:
            spec["beta"] = args.beta
        cfg = ExperimentConfig(manifold=spec, grids=args.grids or DEFAULT_GRIDS)
    if args.grids:
        cfg.grids = args.grids
        cfg.__post_init__()
    if args.lmax is not None:
        cfg.lmax = args.lmax
        cfg.__post_init__()
    if args.out:
        cfg.output_dir = str(args.out)
    if tasks:
        cfg.tasks = tasks
        cfg.__post_init__()
    return cfg


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=float))
    elif not args.quiet:
        print(text)


def _cmd_build(args):
    cfg = _config(args)
    M = build_from_spec(cfg.manifold, cfg.base_dir)
    doc = manifold_to_dict(M)
    cls = validate_manifold(M)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifold.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    payload = {"manifold": doc, "classification": cls.as_dict(),
               "written": str(out / "manifold.json")}
    if M.profile.kind == "football":
        r, f = M.profile.sample_table()
        (out / "football_table.csv").write_text(
            "r,f\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(r, f)))
        payload["football"] = {"c2": M.profile.c2, "f_max": M.profile.f_max,
                               "length": M.length}
    _emit(args, payload, f"{M.name}: case {cls.case}, interval [{M.a:.6g}, {M.b:.6g}] "
          f"-> {out / 'manifold.json'}")
    return 0


def _report_text(rep):
    lines = [f"{rep.manifold_name}"]
    for c in rep.checks:
        lines.append(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['task']}.{c['check']}: "
                     f"{c['detail']}")
    for e in rep.errors:
        lines.append(f"  [ERROR] {e['task']}: {e['error']}")
    s = rep.summary()
    if "margin" in s:
        lines.append(f"  lambda1 = {s['lambda1_global']:.12g}, bound = {s['bound']:.12g}, "
                     f"margin = {s['margin']:.3e}")
    return "\n".join(lines)


def _cmd_verify(args):
    tasks = args.tasks.split(",") if getattr(args, "tasks", None) else None
    rep = run(_config(args, tasks))
    _emit(args, rep.summary(), _report_text(rep))
    return rep.exit_code


def _cmd_converge(args):
    table = convergence_study(_config(args), quantity=args.quantity)
    lines = [f"{'grid':>8} {'value':>24} {'error':>12} {'order':>8}"]
    for row in table.rows():
        lines.append(f"{row['grid']:>8d} {row['value']:>24.17g} {row['error']:>12.4e} "
                     f"{row['order']:>8.4f}")
    lines.append(f"estimated order {table.order:.4f}" + ("  (below floor)" if table.flagged
                                                          else ""))
    lines += [f"warning: {w}" for w in table.warnings]
    _emit(args, table.as_dict(), "\n".join(lines))
    return 1 if table.flagged else 0


def _cmd_regularity(args):
    n = args.dim or 4
    beta = args.beta if args.beta is not None else -0.5
    lmax = args.lmax or 4
    N = (args.grids or [2001])[-1]
    pred = regularity_exponent(n, beta)
    rows = []
    for degree in range(1, lmax + 1):
        roots = indicial_roots(n, beta, sphere_eigenvalue(n, degree))
        sol = solve_radial_mode(degree, beta, n, lambda t: 0.0 * t, graded_grid(1.0, N, beta))
        pts, vals = dyadic_samples(sol.rho, sol.fd)
        est = estimate_holder_exponent(pts, vals, u0=0.0)
        rows.append({"degree": degree, "alpha_plus": roots.alpha_plus,
                     "alpha_minus": roots.alpha_minus, "measured": est.exponent,
                     "stderr": est.stderr})
    payload = {"n": n, "beta": beta, "gamma1": pred.gamma1, "class": pred.describe(),
               "modes": rows}
    lines = [f"n={n} beta={beta:g}: gamma1 = {pred.gamma1:.6f}, class {pred.describe()}"]
    lines += [f"  l={r['degree']}: alpha+ = {r['alpha_plus']:.6f}, measured "
              f"{r['measured']:.6f}" for r in rows]
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_report(args):
    cfg = _config(args)
    rep = run(cfg)
    files = emit_plot_data(rep, cfg.output_dir)
    payload = rep.summary()
    payload["plots"] = [str(f) for f in files]
    _emit(args, payload, _report_text(rep) + "\n" + "\n".join(f"  wrote {f}" for f in files))
    return rep.exit_code


_COMMANDS = {"build": _cmd_build, "verify": _cmd_verify, "converge": _cmd_converge,
             "regularity": _cmd_regularity, "report": _cmd_report}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
