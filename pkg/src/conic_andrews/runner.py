"""Batch experiments: build a manifold from a config, run checks, persist reports.

Configs are JSON documents with ``"schema": "conic-andrews-config/1"``.
Unknown keys are rejected. Every requested task yields rows (one per grid
size) or an explicit error record, and a list of pass/fail checks.
"""

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .andrews import (EQUALITY_TOL, andrews_bound, bochner_deficit, first_eigenvalue,
                      rigidity_check)
from .discretize import ManifoldForms
from .errors import ConfigError, ConvergenceError, InsufficientDataError
from .geometry import check_positive_ricci, manifold_from_dict, sigma_half_reduced
from .library import (build_cap, build_football, build_hemisphere, build_perturbed,
                      build_round_sphere, validate_manifold)
from .spectral import (ModeExpansion, dyadic_samples, estimate_holder_exponent,
                       graded_grid, regularity_exponent, solve_poisson, solve_radial_mode)

__all__ = [
    "CONFIG_SCHEMA", "TASKS", "PRESETS", "ExperimentConfig", "RunReport",
    "ConvergenceTable", "parse_preset", "build_from_spec", "run", "write_report",
    "convergence_study", "emit_plot_data",
]

CONFIG_SCHEMA = "conic-andrews-config/1"
TASKS = ("curvature", "eigen", "bochner", "regularity", "rigidity")
PRESETS = {
    "round_sphere": ({"n"}, {"n": 3}),
    "hemisphere": ({"n"}, {"n": 3}),
    "cap": ({"n", "radius"}, {"n": 3, "radius": math.pi / 3}),
    "football": ({"n", "beta"}, {"n": 4, "beta": -0.5}),
    "perturbed_sphere": ({"n", "eps", "m"}, {"n": 4, "eps": 0.05, "m": 1}),
}
DEFAULT_TOLERANCES = {
    "equality": EQUALITY_TOL,
    "bochner_factor": 10.0,
    "regularity": 0.01,
    "order_floor": 1.5,
}
_CONFIG_KEYS = {"schema", "manifold", "grids", "lmax", "tolerances", "output_dir",
                "tasks", "bochner_samples", "seed"}


def parse_preset(text):
    """``"football n=4 beta=-0.5"`` -> ``{"preset": "football", "n": 4, "beta": -0.5}``."""
    parts = text.split()
    if not parts:
        raise ConfigError("empty preset")
    spec = {"preset": parts[0]}
    for item in parts[1:]:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"preset parameter {item!r} is not key=value")
        spec[key] = int(val) if key in ("n", "m") else float(val)
    return spec


def build_from_spec(spec, base_dir="."):
    """Build a ``WarpedManifold`` from a preset spec or a manifold JSON file."""
    spec = dict(spec)
    if "profile_file" in spec:
        if set(spec) != {"profile_file"}:
            raise ConfigError("profile_file cannot be combined with preset parameters")
        path = Path(base_dir) / spec["profile_file"]
        try:
            return manifold_from_dict(json.loads(path.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifold file {path}: {exc}") from exc
    name = spec.pop("preset", None)
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    allowed, defaults = PRESETS[name]
    extra = set(spec) - allowed
    if extra:
        raise ConfigError(f"preset {name!r} does not take {sorted(extra)}")
    p = {**defaults, **spec}
    try:
        if name == "round_sphere":
            return build_round_sphere(int(p["n"]))
        if name == "hemisphere":
            return build_hemisphere(int(p["n"]))
        if name == "cap":
            return build_cap(int(p["n"]), float(p["radius"]))
        if name == "football":
            return build_football(int(p["n"]), float(p["beta"]))[0]
        return build_perturbed(build_round_sphere(int(p["n"])), float(p["eps"]), int(p["m"]))
    except ValueError as exc:
        raise ConfigError(f"building preset {name!r} failed: {exc}") from exc


@dataclass
class ExperimentConfig:
    manifold: dict
    grids: list
    lmax: int = 4
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "out"
    tasks: list = field(default_factory=lambda: list(TASKS))
    bochner_samples: int = 50
    seed: int = 0
    base_dir: str = "."

    def __post_init__(self):
        if not isinstance(self.manifold, dict) or not self.manifold:
            raise ConfigError("manifold must be a non-empty mapping")
        if not self.tasks:
            raise ConfigError("at least one task is required")
        bad = [t for t in self.tasks if t not in TASKS]
        if bad:
            raise ConfigError(f"unknown tasks {bad}; choose from {list(TASKS)}")
        if len(set(self.tasks)) != len(self.tasks):
            raise ConfigError("duplicate tasks")
        if not self.grids or any(int(g) != g or g < 11 for g in self.grids):
            raise ConfigError("grids must be integers >= 11")
        if any(b <= a for a, b in zip(self.grids, self.grids[1:])):
            raise ConfigError("grid sizes must be strictly increasing")
        self.grids = [int(g) for g in self.grids]
        if int(self.lmax) != self.lmax or self.lmax < 1:
            raise ConfigError("lmax must be an integer >= 1")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}
        if self.bochner_samples < 1:
            raise ConfigError("bochner_samples must be >= 1")

    @classmethod
    def from_dict(cls, d, base_dir="."):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if d.get("schema") != CONFIG_SCHEMA:
            raise ConfigError(f"config schema must be {CONFIG_SCHEMA!r}")
        if "manifold" not in d or "grids" not in d:
            raise ConfigError("config needs 'manifold' and 'grids'")
        body = {k: v for k, v in d.items() if k != "schema"}
        return cls(base_dir=str(base_dir), **body)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self):
        return {"schema": CONFIG_SCHEMA, "manifold": self.manifold, "grids": self.grids,
                "lmax": self.lmax, "tolerances": self.tolerances,
                "output_dir": self.output_dir, "tasks": self.tasks,
                "bochner_samples": self.bochner_samples, "seed": self.seed}


@dataclass
class RunReport:
    config: ExperimentConfig
    manifold_name: str = ""
    n: int = 0
    betas: tuple = ()
    rows: dict = field(default_factory=dict)      # task -> list of row dicts
    checks: list = field(default_factory=list)    # {"task", "check", "passed", "detail"}
    errors: list = field(default_factory=list)    # {"task", "error"}
    timings: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.errors and all(c["passed"] for c in self.checks)

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def check(self, task, name, passed, detail=""):
        self.checks.append({"task": task, "check": name, "passed": bool(passed),
                            "detail": detail})

    def summary(self):
        out = {"manifold": self.manifold_name, "n": self.n, "betas": list(self.betas),
               "bound": andrews_bound(self.n) if self.n else None,
               "passed": self.passed, "checks": self.checks, "errors": self.errors,
               "timings": self.timings}
        eig = self.rows.get("eigen") or self.rows.get("rigidity")
        if eig:
            last = eig[-1]
            out["lambda1_global"] = last["lambda1"]
            out["margin"] = last["margin"]
        if self.rows.get("rigidity"):
            out["equality"] = bool(self.rows["rigidity"][-1]["equality"])
        return out


def _random_radial(M, rng, terms=4):
    # cos(k pi (r - a)/L) has u' = 0 at both ends: bounded at tips, Neumann at boundaries.
    c = rng.standard_normal(terms)
    w = math.pi / M.length * np.arange(1, terms + 1)
    a = M.a
    return (lambda r: np.cos(np.outer(r - a, w)) @ c,
            lambda r: -(np.sin(np.outer(r - a, w)) * w) @ c,
            lambda r: -(np.cos(np.outer(r - a, w)) * w ** 2) @ c)


def _task_curvature(M, cfg, rep):
    cls = validate_manifold(M)
    for N in cfg.grids:
        ric = check_positive_ricci(M, samples=N)
        row = {"grid": N, "min_rho": ric.min_rho, "min_location": ric.min_location,
               "min_rho_rad": ric.min_rho_rad, "min_rho_tan": ric.min_rho_tan}
        if M.profile.kind == "football":
            s = sigma_half_reduced(M, M.interior_points(N))
            row["sigma_half_spread"] = float((s.max() - s.min()) / abs(s.mean()))
        rep.rows.setdefault("curvature", []).append(row)
    rep.check("curvature", "positive_ricci", ric.passed, f"min {ric.min_rho:.6g}")
    rep.check("curvature", "cone_angles", cls.betas_consistent,
              f"case {cls.case}, slopes {cls.measured_slopes}")
    if "sigma_half_spread" in row:
        rep.check("curvature", "sigma_half_constant", row["sigma_half_spread"] < 1e-6,
                  f"relative spread {row['sigma_half_spread']:.3e}")


def _task_eigen(M, cfg, rep):
    for N in cfg.grids:
        e = first_eigenvalue(M, nodes=N, lmax=cfg.lmax)
        row = {"grid": N, "lambda1": e.lambda1_global, "ell_star": e.ell_star,
               "error_estimate": e.error_estimate, "extrapolated": e.extrapolated,
               "margin": e.margin}
        row.update({f"lambda1_l{l}": v for l, v in enumerate(e.lambda1_per_mode)})
        rep.rows.setdefault("eigen", []).append(row)
    rep.artifacts["eigen"] = e
    rep.check("eigen", "sharp_bound", e.bound_satisfied,
              f"lambda1 {e.lambda1_global:.10g} >= {e.bound:.10g} - {e.error_estimate:.3e}")


def _task_bochner(M, cfg, rep):
    rng = np.random.default_rng(cfg.seed)
    factor = cfg.tolerances["bochner_factor"]
    samples = [_random_radial(M, rng) for _ in range(cfg.bochner_samples)]
    for N in cfg.grids:
        worst_ratio, worst_res = 0.0, 0.0
        for u in samples:
            d = bochner_deficit(M, u, panels=N)
            worst_ratio = max(worst_ratio, d.residual / d.quadrature_error)
            worst_res = max(worst_res, d.residual)
        rep.rows.setdefault("bochner", []).append(
            {"grid": N, "samples": len(samples), "max_residual": worst_res,
             "max_residual_over_tol": worst_ratio})
    rep.check("bochner", "identity", worst_ratio < factor,
              f"max residual / quadrature tolerance = {worst_ratio:.3g}")


def _task_regularity(M, cfg, rep):
    cones = sorted({e.beta for e in M.ends if e.kind == "cone"})
    if not cones:
        rep.rows["regularity"] = []
        rep.check("regularity", "applicable", True, "no cone tips: nothing to measure")
        return
    tol = cfg.tolerances["regularity"]
    worst = 0.0
    fits = []
    for beta in cones:
        pred = regularity_exponent(M.n, beta)
        for N in cfg.grids:
            grid = graded_grid(1.0, N, beta)
            for degree in range(1, cfg.lmax + 1):
                sol = solve_radial_mode(degree, beta, M.n, lambda t: 0.0 * t, grid)
                alpha = sol.roots.alpha_plus
                row = {"grid": N, "beta": beta, "degree": degree, "alpha_plus": alpha,
                       "measured": float("nan"), "stderr": float("nan"),
                       "gamma1": pred.gamma1, "class": pred.describe()}
                rep.rows.setdefault("regularity", []).append(row)
                try:
                    pts, vals = dyadic_samples(sol.rho, sol.fd)
                    est = estimate_holder_exponent(pts, vals, u0=0.0)
                except InsufficientDataError:
                    # Coarse grids may not resolve enough levels; the finest must.
                    if N == cfg.grids[-1]:
                        raise
                    continue
                row.update(measured=est.exponent, stderr=est.stderr)
                if N == cfg.grids[-1]:
                    worst = max(worst, abs(est.exponent - alpha))
                    fits.append((beta, degree, pts, vals, est.exponent))
    rep.artifacts["regularity"] = fits
    rep.check("regularity", "indicial_exponents", worst < tol,
              f"max |measured - alpha_+| = {worst:.3e}")


def _task_rigidity(M, cfg, rep):
    for N in cfg.grids:
        e = first_eigenvalue(M, nodes=N, lmax=cfg.lmax)
        rc = rigidity_check(M, e, tol=cfg.tolerances["equality"])
        rep.rows.setdefault("rigidity", []).append(
            {"grid": N, "lambda1": e.lambda1_global, "margin": e.margin,
             "error_estimate": e.error_estimate, "ell_star": e.ell_star,
             "equality": int(rc.equality), "energy_ratio": rc.ratio,
             "gradient_residual": rc.gradient_residual, "fhat_residual": rc.fhat_residual,
             "case": rc.case})
    rep.artifacts.setdefault("eigen", e)
    strict = e.margin > 5.0 * e.error_estimate
    rep.check("rigidity", "equality_consistent", not (strict and rc.equality),
              f"equality={rc.equality}, margin {e.margin:.3e}, tol {e.error_estimate:.3e}")


_RUNNERS = {"curvature": _task_curvature, "eigen": _task_eigen, "bochner": _task_bochner,
            "regularity": _task_regularity, "rigidity": _task_rigidity}


def run(config, write=True):
    """Run every task of ``config`` in the fixed order of ``TASKS``.

    Task failures are recorded as error entries (and fail the run) rather
    than aborting the remaining tasks. Manifold build failures propagate.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    M = build_from_spec(cfg.manifold, cfg.base_dir)
    rep = RunReport(cfg, M.name, M.n,
                    tuple(e.beta for e in M.ends if e.kind == "cone"))
    rep.artifacts["manifold"] = M
    for task in TASKS:
        if task not in cfg.tasks:
            continue
        t0 = time.perf_counter()
        try:
            _RUNNERS[task](M, cfg, rep)
        except (ValueError, RuntimeError, ConvergenceError) as exc:
            rep.errors.append({"task": task, "error": f"{type(exc).__name__}: {exc}"})
        rep.timings[task] = time.perf_counter() - t0
    if write:
        write_report(rep, cfg.output_dir)
    return rep


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path, rows):
    cols = []
    for row in rows:
        cols += [k for k in row if k not in cols]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(cols)
        for row in rows:
            out.writerow([_fmt(row.get(c, "")) for c in cols])


def write_report(rep, out_dir):
    """``<task>.csv`` per task (one row per grid size) and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for task in TASKS:
        if task in rep.rows and rep.rows[task]:
            path = out / f"{task}.csv"
            _write_csv(path, rep.rows[task])
            written.append(path)
    path = out / "summary.json"
    path.write_text(json.dumps(rep.summary(), indent=2, sort_keys=True, default=_json_default)
                    + "\n")
    written.append(path)
    return written


def _json_default(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


@dataclass
class ConvergenceTable:
    quantity: str
    grids: list
    values: list
    errors: list
    orders: list
    order: float
    flagged: bool
    warnings: list

    def rows(self):
        out = []
        for i, N in enumerate(self.grids):
            out.append({"grid": N, "value": self.values[i],
                        "error": self.errors[i] if i < len(self.errors) else float("nan"),
                        "order": self.orders[i] if i < len(self.orders) else float("nan")})
        return out

    def as_dict(self):
        return {"quantity": self.quantity, "order": self.order, "flagged": self.flagged,
                "warnings": self.warnings, "rows": self.rows()}


def _manufactured_error(M, N):
    # u = cos(pi (r-a)/L): bounded at tips, Neumann at boundaries.
    r = M.grid(N)
    k = math.pi / M.length
    x = r[1:-1]
    f, df = M.profile.f(x), M.profile.df(x)
    phi = np.empty_like(r)
    phi[1:-1] = -k * k * np.cos(k * (x - M.a)) - (M.n - 1) * df / f * k * np.sin(k * (x - M.a))
    # Tip limits of f'/f u' for even-in-distance u.
    for idx, end in ((0, M.ends[0]), (-1, M.ends[1])):
        ue = -k * k * np.cos(k * (r[idx] - M.a))
        phi[idx] = M.n * ue if end.is_tip else ue
    forms = ManifoldForms(M, r)
    W = forms.W
    phi -= np.sum(W * phi) / np.sum(W)
    u = solve_poisson(M, ModeExpansion(r, {0: phi}), forms=forms).modes[0]
    exact = np.cos(k * (r - M.a))
    exact -= np.sum(W * exact) / np.sum(W)
    return float(np.max(np.abs(u - exact)))


def convergence_study(config, quantity="eigen"):
    """Observed order from successive grid refinements.

    ``quantity="eigen"`` uses successive differences of ``lambda1_global``;
    ``"poisson"`` uses the max-norm error of a manufactured degree-0 solve
    with ``u = cos(pi (r - a)/L)``. Orders below the configured floor are
    flagged; a non-monotone error sequence is a warning.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if len(cfg.grids) < 3:
        raise ConfigError("convergence study needs at least 3 grid sizes")
    M = build_from_spec(cfg.manifold, cfg.base_dir)
    grids = cfg.grids
    if quantity == "eigen":
        values = [first_eigenvalue(M, nodes=N, lmax=cfg.lmax).lambda1_global for N in grids]
        errors = [abs(b - a) for a, b in zip(values, values[1:])]
    elif quantity == "poisson":
        values = [_manufactured_error(M, N) for N in grids]
        errors = list(values)
    else:
        raise ConfigError(f"unknown convergence quantity {quantity!r}")
    # Refinement ratio in cells, so grids like 101, 201, 401 count as doubling.
    steps = [(b - 1) / (a - 1) for a, b in zip(grids, grids[1:])]
    orders = []
    for i in range(len(errors) - 1):
        if errors[i] > 0 and errors[i + 1] > 0:
            orders.append(math.log(errors[i] / errors[i + 1]) / math.log(steps[i]))
        else:
            orders.append(float("nan"))
    warnings = []
    if any(b >= a for a, b in zip(errors, errors[1:])):
        warnings.append("non-monotone error sequence")
    finite = [o for o in orders if math.isfinite(o)]
    order = float(np.mean(finite[-2:])) if finite else float("nan")
    flagged = not (order >= cfg.tolerances["order_floor"])
    return ConvergenceTable(quantity, grids, values, errors, orders, order, flagged, warnings)


def emit_plot_data(rep, out_dir):
    """Profile, eigenfunction and regularity-fit plots (SVG) with their CSV data.

    Only what the report holds is plotted; an empty report writes nothing.
    """
    M = rep.artifacts.get("manifold")
    eig = rep.artifacts.get("eigen")
    fits = rep.artifacts.get("regularity")
    if M is None and eig is None and not fits:
        return []
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "conic-andrews"
    written = []

    def save(fig, name):
        path = out / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

    if M is not None:
        r = M.grid(401)
        f = M.profile.f(r)
        _write_csv(out / "profile.csv", [{"r": a, "f": b} for a, b in zip(r, f)])
        written.append(out / "profile.csv")
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(r, f)
        ax.set_xlabel("r")
        ax.set_ylabel("f(r)")
        ax.set_title(M.name)
        save(fig, "profile.svg")
    if eig is not None:
        phi = eig.eigenfunctions[eig.ell_star]
        _write_csv(out / "eigenfunction.csv",
                   [{"r": a, "phi": b} for a, b in zip(eig.r, phi)])
        written.append(out / "eigenfunction.csv")
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(eig.r, phi)
        ax.set_xlabel("r")
        ax.set_ylabel(f"phi_{eig.ell_star}(r)")
        ax.set_title(f"lambda1 = {eig.lambda1_global:.8f}")
        save(fig, "eigenfunction.svg")
    if fits:
        rows = []
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for beta, degree, pts, vals, slope in fits:
            rows += [{"beta": beta, "degree": degree, "rho": p, "u": v}
                     for p, v in zip(pts, vals)]
            ax.loglog(pts, np.abs(vals), "o-", ms=3,
                      label=f"beta={beta:g}, l={degree}: slope {slope:.4f}")
        ax.set_xlabel("rho")
        ax.set_ylabel("|u(rho)|")
        ax.legend(fontsize=6)
        _write_csv(out / "regularity.csv", rows)
        written.append(out / "regularity.csv")
        save(fig, "regularity.svg")
    return written
