"""Command-line driver: one subcommand per run mode.

    python3 -m thinfilm evolve --config run.cfg --output out/ --emit-plots

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 invariant violation.  Outputs are written as they become available, and
metadata.json is always written, so partial results stay inspectable.
"""
import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

from . import __version__
from .bounds import (BoundViolation, DegenerateBoundError, bound_vs_simulation, constants_from_initial_data,
                     log_bracket, m_curve)
from .config import MODES, ConfigError, RunConfig, parse_text
from .equilibrium import BvpDivergence, forces, is_monotone, solve_bvp, sweep_dip
from .galerkin import GalerkinSystem, evolve_galerkin
from .grid import Grid, check_sobolev_inequalities, random_trig_polynomial
from .model import State
from .plotting import write_chart
from .timestepper import SolverConfig, evolve, perturbed_uniform_state

log = logging.getLogger("thinfilm")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4
INEQUALITY_TOL = -1e-10


class SolverFailure(RuntimeError):
    pass


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


class Outputs:
    """Single writer for every file of a run."""

    def __init__(self, directory, plots=False):
        self.dir = directory
        self.plots = plots
        self.files = []
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.dir, name)

    def csv(self, name, header, rows):
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])

    def json(self, name, data):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(data), fh, indent=2, allow_nan=False)
            fh.write("\n")

    def chart(self, name, series, **kw):
        if self.plots:
            write_chart(self.path(name), series, **kw)


def initial_state(cfg, grid=None):
    grid = grid or cfg.grid()
    kind = cfg["init.kind"]
    a, h0, c0 = cfg["init.amplitude"], cfg["init.h0"], cfg["init.c0"]
    try:
        if kind == "perturbed":
            return perturbed_uniform_state(grid, a, cfg["seed"], h0, c0)
        if kind == "flat":
            return State.uniform(grid, h0, c0)
        k = 2 * np.pi * cfg["init.mode"] / grid.length
        return State(grid, h0 + a * np.cos(k * grid.x), c0 + a * np.sin(k * grid.x))
    except ValueError as exc:
        raise ConfigError(str(exc), key="init") from None


def _trajectory_rows(rec):
    for t, e, hm, v, m in zip(rec.times, rec.energies, rec.h_min, rec.volume, rec.mass):
        yield t, e.F, e.F1, e.F2, e.D_film, e.D_diff, hm, v, m


_TRAJ_HEADER = ["t", "F", "F1", "F2", "D_film", "D_diff", "h_min", "volume", "mass"]


def run_evolve(cfg, out):
    p, s0, scfg = cfg.params(), initial_state(cfg), cfg.solver()
    rec = evolve(s0, p, scfg)
    out.csv("trajectory.csv", _TRAJ_HEADER, _trajectory_rows(rec))
    final = rec.final
    out.csv("final_state.csv", ["x", "h", "c"], zip(final.grid.x, final.h, final.c))
    F = np.array(rec.free_energy)
    dv, dm = rec.drift()
    diag = {
        "status": rec.status, "message": rec.message,
        "accepted_steps": rec.accepted, "rejected_steps": rec.rejected,
        "t_final": rec.times[-1], "F_initial": F[0], "F_final": F[-1],
        "max_F_increase": float(np.max(np.diff(F))) if F.size > 1 else 0.0,
        "volume_drift": dv, "mass_drift": dm,
        "h_min_overall": rec.h_min_overall, "max_abs_c_final": float(np.max(np.abs(final.c))),
    }
    out.chart("h_final.svg", [("h", final.grid.x, final.h)], title="film height", xlabel="x", ylabel="h")
    out.chart("c_final.svg", [("c", final.grid.x, final.c)], title="concentration", xlabel="x", ylabel="c")
    out.chart("energy.svg", [("F", rec.times, F)], title="free energy", xlabel="t", ylabel="F")
    out.chart("h_min.svg", [("h_min", rec.times, rec.h_min)], title="minimum height", xlabel="t",
              ylabel="h_min")
    if rec.status != "completed":
        raise SolverFailure(rec.message)
    problems = []
    if max(dv, dm) > cfg["check.drift_tol"]:
        problems.append(f"conserved-integral drift {max(dv, dm):.3g} above {cfg['check.drift_tol']:.3g}")
    if rec.energies[0].certified and diag["max_F_increase"] > scfg.energy_slack:
        problems.append(f"free energy increased by {diag['max_F_increase']:.3g}")
    if p.A < 0:
        try:
            rep = bound_vs_simulation(rec, constants_from_initial_data(s0, p), strict=False)
            diag["bound"] = {"M": rep.M, "log_M": rep.log_M, "h_min_over_M": rep.ratio, "holds": rep.holds}
            if not rep.holds:
                problems.append(f"h_min {rep.h_min_observed:.6g} below the bound {rep.M:.6g}")
        except DegenerateBoundError as exc:
            diag["bound"] = {"degenerate": str(exc)}
    return diag, problems


def _profile_diag(prof):
    return {
        "h_min": prof.h_min, "max_grad_c": prof.max_grad_c, "interface_width": prof.interface_width,
        "residual_norm": prof.residual_norm, "iterations": prof.iterations,
        "phase_multiplier": prof.phase_multiplier, "end_slope_h": prof.end_slopes[0],
        "end_slope_c": prof.end_slopes[1],
    }


def run_bvp(cfg, out):
    p, bcfg = cfg.params(), cfg.bvp()
    try:
        prof = solve_bvp(p, bcfg)
    except BvpDivergence as exc:
        raise SolverFailure(str(exc)) from None
    out.csv("h_profile.csv", ["x", "value"], zip(prof.x, prof.h))
    out.csv("c_profile.csv", ["x", "value"], zip(prof.x, prof.c))
    F_cap, F_vdw = forces(prof, p)
    out.csv("forces.csv", ["x", "F_cap", "F_vdw"], zip(prof.x, F_cap, F_vdw))
    out.chart("h_profile.svg", [("h", prof.x, prof.h)], title="equilibrium height", xlabel="x", ylabel="h")
    out.chart("c_profile.svg", [("c", prof.x, prof.c)], title="equilibrium concentration", xlabel="x",
              ylabel="c")
    out.chart("forces.svg", [("F_cap", prof.x, F_cap), ("F_VdW", prof.x, F_vdw)], title="forces",
              xlabel="x", ylabel="force")
    diag = _profile_diag(prof)
    problems = []
    if max(prof.end_slopes) > 1e-8:
        problems.append(f"end slopes {max(prof.end_slopes):.3g} above 1e-8: widen bvp.half_width")
    if prof.h_min <= 0:
        problems.append("equilibrium height is not positive")
    return diag, problems


def _solve_point(args):
    p, bcfg = args
    try:
        prof = solve_bvp(p, bcfg)
        return prof.h_min, prof.residual_norm, prof.iterations, True
    except BvpDivergence as exc:
        log.info("sweep point failed: %s", exc)
        return float("nan"), float("nan"), 0, False


def run_sweep(cfg, out):
    p, bcfg = cfg.params(), cfg.bvp()
    name = cfg["sweep.parameter"]
    values = cfg.sweep_values()
    if name == "A" and any(v <= 0 for v in values):
        raise ConfigError("|A| values must be positive", key="sweep.values")
    if name == "r" and any(v < 0 for v in values):
        raise ConfigError("r values must be nonnegative", key="sweep.values")
    if p.A >= 0:
        raise ConfigError("sweeps need a repulsive VdW term (A < 0)", key="params.A")
    workers = cfg["sweep.workers"]
    if workers > 1 and len(values) > 1:
        # independent cold starts, so the table does not depend on scheduling
        tasks = [((p.replace(A=-v) if name == "A" else p.replace(r=v)), bcfg) for v in values]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_point, tasks))
        rows = [(v, *res) for v, res in zip(values, results)]
    else:
        rows = [(r.value, r.h_min, r.residual, r.iterations, r.ok) for r in sweep_dip(p, name, values, bcfg)]
    out.csv("sweep.csv", [name if name == "r" else "A_abs", "h_min", "residual", "iterations", "ok"], rows)
    good = [r for r in rows if r[4]]
    hm = [r[1] for r in good]
    trend = "increasing" if is_monotone(hm, True) else "decreasing" if is_monotone(hm, False) else "none"
    out.chart("sweep.svg", [("h_min", [r[0] for r in good], hm)], title=f"h_min against {name}",
              xlabel=name, ylabel="h_min")
    diag = {"points": len(rows), "failed": len(rows) - len(good), "monotonicity": trend if len(hm) > 1 else "n/a"}
    if not good:
        raise SolverFailure("every sweep point failed")
    return diag, []


def run_bound(cfg, out):
    a0, a1, n = cfg["bound.A_start"], cfg["bound.A_stop"], cfg["bound.A_count"]
    A = np.geomspace(a0, a1, n)
    F0, F1, C, L = cfg["bound.F0"], cfg["bound.F1"], cfg["bound.C"], cfg["bound.L"]
    E = F0 + F1 * A
    if np.any(E <= 0) or C <= 0 or L <= 0:
        raise ConfigError("need F0 + F1 |A| > 0, C > 0 and L > 0", key="bound")
    M = m_curve(A, F0, F1, C, L)
    logM = 0.5 * np.log(2 * C * L * E) + log_bracket(4 * C * E * E / A)
    out.csv("M_curve.csv", ["A_abs", "M", "log_M"], zip(A, M, logM))
    out.chart("M_curve.svg", [("M", A, M)], title="height bound M(|A|)", xlabel="|A|", ylabel="M")
    i = int(np.argmax(logM))
    d = np.diff(logM)
    diag = {
        "argmax_A": A[i], "M_max": M[i], "interior_max": 0 < i < n - 1,
        "unimodal": bool(np.all(d[:i] > 0) and np.all(d[i:] < 0)),
        "positive": bool(np.all(logM > -np.inf) and np.all(np.isfinite(logM))),
    }
    return diag, [] if diag["positive"] else ["M not positive on the whole curve"]


def run_galerkin(cfg, out):
    p, scfg = cfg.params(), cfg.solver()
    s0 = initial_state(cfg)
    sys0 = GalerkinSystem.from_state(s0, cfg["galerkin.n_modes"], cfg["galerkin.eps"], cfg["galerkin.n_quad"])
    rec = evolve_galerkin(sys0, p, scfg, rtol=cfg["galerkin.rtol"], atol=cfg["galerkin.atol"])
    eta0 = rec.extras.get("eta0", np.array([sys0.eta[0]]))
    rows = [(t, e.F, hm, ez) for t, e, hm, ez in zip(rec.times, rec.energies, rec.h_min, eta0)]
    out.csv("galerkin_trajectory.csv", ["t", "F_eps", "h_min", "eta0"], rows)
    if rec.states:
        fin = rec.final
        out.csv("final_state.csv", ["x", "h", "c"], zip(fin.grid.x, fin.h, fin.c))
    if rec.status != "completed":
        raise SolverFailure(rec.message)
    F = np.array(rec.free_energy)
    diag = {
        "status": rec.status, "t_final": rec.times[-1],
        "eta0_spread": float(np.ptp(eta0)), "max_F_increase": float(np.max(np.diff(F))) if F.size > 1 else 0.0,
        "h_min_overall": rec.h_min_overall,
    }
    problems = []
    if diag["eta0_spread"] > 1e-10 * max(1.0, abs(eta0[0])):
        problems.append(f"zeroth mode drifted by {diag['eta0_spread']:.3g}")
    if cfg["galerkin.compare"]:
        grid = cfg.grid()
        final_sys = rec.extras["systems"][-1]
        start = State(grid, sys0.h(grid.x), sys0.c(grid.x))
        dt = min(1e-4, scfg.t_end / 100)
        gcfg = SolverConfig(t_end=scfg.t_end, dt_init=dt, dt_min=dt * 1e-3, dt_max=dt,
                            record_every=scfg.t_end, scheme="fully_implicit", newton_tol=1e-12)
        grec = evolve(start, p, gcfg)
        if grec.status != "completed":
            raise SolverFailure("grid solver failed in the comparison run: " + grec.message)
        gfin = grec.final
        dh = float(np.max(np.abs(gfin.h - final_sys.h(grid.x))))
        dc = float(np.max(np.abs(gfin.c - final_sys.c(grid.x))))
        diag["grid_comparison"] = {"max_abs_dh": dh, "max_abs_dc": dc, "grid_n": grid.n}
        if max(dh, dc) > 1e-3:
            problems.append(f"Galerkin and grid solutions differ by {max(dh, dc):.3g}")
    return diag, problems


def run_inequalities(cfg, out):
    trials, degree = cfg["inequalities.trials"], cfg["inequalities.degree"]
    try:
        grid = Grid(cfg["inequalities.length"], cfg["inequalities.n"])
    except ValueError as exc:
        raise ConfigError(str(exc), key="inequalities") from None
    if degree >= grid.n // 4:
        raise ConfigError("degree must stay below n/4 so fields are resolved", key="inequalities.degree")
    rows = []
    for i in range(trials):
        rng = np.random.default_rng([cfg["seed"], i])
        f, _ = random_trig_polynomial(grid, degree, rng)
        sl = check_sobolev_inequalities(f, grid)
        rows.append((i, sl.sup_slack, sl.grad_slack, sl.reliable))
    out.csv("inequalities.csv", ["trial", "sup_slack", "grad_slack", "reliable"], rows)
    sup = min(r[1] for r in rows)
    grad = min(r[2] for r in rows)
    diag = {"trials": trials, "min_sup_slack": sup, "min_grad_slack": grad, "min_slack": min(sup, grad),
            "tolerance": INEQUALITY_TOL, "all_reliable": all(r[3] for r in rows)}
    out.json("summary.json", diag)
    problems = [] if min(sup, grad) >= INEQUALITY_TOL else [f"inequality slack {min(sup, grad):.3g} below tolerance"]
    return diag, problems


RUNNERS = {
    "evolve": run_evolve, "bvp": run_bvp, "sweep": run_sweep, "bound": run_bound,
    "galerkin": run_galerkin, "check-inequalities": run_inequalities,
}


def versions():
    return {"thinfilm": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run(cfg):
    """Execute one configured run; returns the process exit code."""
    out = Outputs(cfg["output_dir"], cfg["emit_plots"])
    t0 = time.perf_counter()
    diag, problems, status, message, code = {}, [], "ok", "", EXIT_OK
    try:
        diag, problems = RUNNERS[cfg.mode](cfg, out)
        if problems:
            status, message, code = "invariant_violation", "; ".join(problems), EXIT_INVARIANT
    except ConfigError as exc:
        status, message, code = "config_error", str(exc), EXIT_CONFIG
    except (SolverFailure, BvpDivergence) as exc:
        status, message, code = "solver_failure", str(exc), EXIT_SOLVER
    except BoundViolation as exc:
        status, message, code = "invariant_violation", str(exc), EXIT_INVARIANT
    meta = {
        "mode": cfg.mode, "status": status, "message": message, "exit_code": code,
        "partial": code == EXIT_SOLVER, "config": cfg.to_mapping(), "versions": versions(),
        "wall_time_s": time.perf_counter() - t0, "diagnostics": diag,
    }
    meta["files"] = list(out.files) + ["metadata.json"]
    out.json("metadata.json", meta)
    if code:
        print(f"thinfilm {cfg.mode}: {status}: {message}", file=sys.stderr)
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--output", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--emit-plots", action="store_true", help="also write SVG plots")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; may be repeated")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="thinfilm", description="Thin-film Cahn-Hilliard experiments.")
    sub = ap.add_subparsers(dest="mode", required=True)
    for m in MODES:
        sub.add_parser(m, parents=[common])
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        vals = parse_text(text)
        for kv in args.set:
            try:
                vals.update(parse_text(kv))
            except ConfigError as exc:
                raise ConfigError(f"--set {kv!r}: {exc}") from None
        vals["mode"] = args.mode
        if args.seed is not None:
            vals["seed"] = args.seed
        if args.output is not None:
            vals["output_dir"] = args.output
        if args.emit_plots:
            vals["emit_plots"] = True
        cfg = RunConfig(vals)
    except OSError as exc:
        print(f"thinfilm: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"thinfilm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
