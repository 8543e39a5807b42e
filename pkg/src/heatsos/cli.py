"""Command-line pipeline: config -> moments -> controller -> traces.

Every stage reads and writes files so that stages can be run, inspected and
replaced one at a time.  Exit codes: 0 ok, 1 usage, 2 solver failure, 3 I/O.
The ``HEATSOS_THREADS`` environment variable caps BLAS threads.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import itertools
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import extraction, lqr, pdesim, sdpsolver
from .problem import ConfigError, HeatControlProblem, RelaxationConfig, config_to_dict, load_config
from .weakform import AssemblyError, assemble

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "HEATSOS_THREADS"


class CliError(Exception):
    def __init__(self, code: int, category: str, message: str):
        super().__init__(message)
        self.code = code
        self.category = category


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message)
        sys.exit(EXIT_USAGE)


def _emit_error(category: str, message: str) -> None:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)


@dataclass
class RunReport:
    instance: dict
    d: int | None = None
    objective: float | None = None
    solver_status: str | None = None
    controller: dict | None = None
    cost_moment: float | None = None
    cost_lqr: float | None = None
    relative_gap: float | None = None
    blowups: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def bound_consistent(self, tol: float = 1e-6) -> bool:
        """The relaxation value must not exceed any simulated closed-loop cost."""
        if self.objective is None:
            return True
        costs = [c for c in (self.cost_moment, self.cost_lqr) if c is not None]
        return all(self.objective <= c + tol for c in costs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bound_consistent"] = self.bound_consistent()
        return out

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")


# --- helpers -------------------------------------------------------------------

def _read_config(path) -> tuple[HeatControlProblem, RelaxationConfig]:
    try:
        return load_config(path)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, "io", f"config {path} is not valid JSON: {exc}") from exc
    except (ConfigError, TypeError, ValueError) as exc:
        raise CliError(EXIT_USAGE, "config", str(exc)) from exc


def _read_json_file(loader, path, what: str):
    try:
        return loader(path)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {what} {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_IO, "io", f"{path} is not a valid {what} file: {exc}") from exc


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot create {out}: {exc}") from exc
    return out


def _write_json(path: Path, doc: dict) -> None:
    try:
        path.write_text(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc}") from exc


def _simulate(problem, args, controller):
    mesh = pdesim.Mesh(args.h)
    return pdesim.run_closed_loop(problem, mesh, args.dt, controller, horizon=args.horizon,
                                  extend_tol=args.extend_tol)


def _emit_trace(trace, out: Path, name: str, plots: bool) -> dict:
    from .plotting import plot_trace

    try:
        paths = pdesim.write_trace(trace, out / name)
        if plots:
            paths["figure"] = plot_trace(trace, out / f"{name}.png", title=name)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write trace {name}: {exc}") from exc
    return {k: str(v) for k, v in paths.items()}


def _blowup_record(trace) -> dict:
    return {"blowup": trace.blowup, "time": trace.blowup_time, "reason": trace.blowup_reason}


def _lqr_gain(problem, h):
    try:
        sol = lqr.solve_problem(problem, pdesim.Mesh(h))
    except lqr.RiccatiError as exc:
        raise CliError(EXIT_SOLVER, "riccati", str(exc)) from exc
    return sol


def _relax(problem, config, tol, max_iter, log=None):
    try:
        program = assemble(problem, config)
    except AssemblyError as exc:
        raise CliError(EXIT_USAGE, "config", str(exc)) from exc
    sol = sdpsolver.solve(program, tol=tol, max_iter=max_iter, callback=log)
    return program, sol


def _gap(a, b):
    return (a - b) / b if b else float("nan")


# --- commands ------------------------------------------------------------------

def _log_iterate(r) -> None:
    print(f"{r.iteration:4d} {r.pobj:+.8e} {r.dobj:+.8e} pres {r.pres:.1e} "
          f"dres {r.dres:.1e} gap {r.gap:.1e}", file=sys.stderr)


def cmd_relax(args) -> int:
    problem, config = _read_config(args.config)
    if args.degree is not None:
        try:
            config = RelaxationConfig(**{**asdict(config), "d": args.degree})
        except ConfigError as exc:
            raise CliError(EXIT_USAGE, "config", str(exc)) from exc
    t0 = time.perf_counter()
    program, sol = _relax(problem, config, args.tol, args.max_iter, _log_iterate if args.verbose else None)
    if args.sdpa:
        try:
            sdpsolver.export_interchange(program, args.sdpa)
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot write {args.sdpa}: {exc}") from exc
    pm = sdpsolver.pseudo_moments(program, sol)
    try:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        sdpsolver.save_pseudo_moments(pm, args.output)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {args.output}: {exc}") from exc
    print(json.dumps({"status": sol.status, "objective": sol.objective, "d": config.d,
                      "iterations": sol.iterations, "rows": program.A.shape[0],
                      "moments": program.n, "seconds": round(time.perf_counter() - t0, 3)}))
    if not sol.ok:
        _emit_error("solver", f"relaxation ended with status {sol.status}")
        return EXIT_SOLVER
    return EXIT_OK


def _spec_from_args(args) -> extraction.ControllerSpec:
    try:
        return extraction.ControllerSpec(args.form, args.m, args.p, args.r, args.mr)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "usage", str(exc)) from exc


def cmd_extract(args) -> int:
    pm = _read_json_file(sdpsolver.load_pseudo_moments, args.moments, "pseudo-moment")
    spec = _spec_from_args(args)
    try:
        ctrl = extraction.extract(pm, spec)
    except extraction.DegreeBudgetError as exc:
        raise CliError(EXIT_USAGE, "degree-budget", str(exc)) from exc
    try:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        extraction.save_controller(ctrl, args.output)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {args.output}: {exc}") from exc
    print(json.dumps({"form": spec.form, "coeffs": ctrl.coeffs.tolist(),
                      "coeffs_delta": ctrl.coeffs_delta.tolist(), "residual": ctrl.residual,
                      "mode": ctrl.mode, "rank": ctrl.rank}))
    return EXIT_OK


def _load_controller(path):
    if path is None:
        return None
    return _read_json_file(extraction.load_controller, path, "controller")


def cmd_simulate(args) -> int:
    problem, config = _read_config(args.config)
    ctrl = _load_controller(args.controller)
    out = _out_dir(args.out_dir)
    t0 = time.perf_counter()
    try:
        trace = _simulate(problem, args, ctrl)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "usage", str(exc)) from exc
    report = RunReport(instance=config_to_instance(problem), d=None)
    report.cost_moment = trace.final_cost
    report.controller = ctrl.to_dict() if ctrl is not None else {"form": "zero"}
    report.blowups[args.name] = _blowup_record(trace)
    report.timings["simulate"] = time.perf_counter() - t0
    files = _emit_trace(trace, out, args.name, not args.no_plots)
    report.write(out / f"{args.name}_report.json")
    print(json.dumps({"cost": trace.final_cost, **_blowup_record(trace), "files": files}))
    return EXIT_OK


def cmd_lqr(args) -> int:
    problem, _ = _read_config(args.config)
    out = _out_dir(args.out_dir)
    t0 = time.perf_counter()
    sol = _lqr_gain(_linearised(problem), args.h)
    t_are = time.perf_counter() - t0
    gain_path = out / "lqr_gain.json"
    try:
        lqr.save_lqr(sol, gain_path, pdesim.Mesh(args.h))
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {gain_path}: {exc}") from exc
    target = problem if args.nonlinear else _linearised(problem)
    trace = _simulate(target, args, lqr.lqr_controller(sol))
    report = RunReport(instance=config_to_instance(problem))
    report.cost_lqr = trace.final_cost
    report.controller = {"form": "lqr", "residual": sol.residual, "spectral_abscissa": sol.spectral_abscissa}
    report.blowups["lqr"] = _blowup_record(trace)
    report.timings.update(riccati=t_are, simulate=time.perf_counter() - t0 - t_are)
    files = _emit_trace(trace, out, "lqr", not args.no_plots)
    report.write(out / "lqr_report.json")
    print(json.dumps({"cost": trace.final_cost, "residual": sol.residual,
                      "spectral_abscissa": sol.spectral_abscissa, **_blowup_record(trace),
                      "files": files}))
    return EXIT_OK


def _linearised(problem: HeatControlProblem) -> HeatControlProblem:
    return replace(problem, eta=0.0, nonlinearity=None)


def config_to_instance(problem: HeatControlProblem) -> dict:
    return config_to_dict(problem)


def cmd_compare(args) -> int:
    problem, config = _read_config(args.config)
    ctrl = _load_controller(args.controller)
    out = _out_dir(args.out_dir)
    report = RunReport(instance=config_to_instance(problem))
    if args.moments:
        pm = _read_json_file(sdpsolver.load_pseudo_moments, args.moments, "pseudo-moment")
        report.d, report.objective, report.solver_status = pm.d, pm.objective, pm.status
    t0 = time.perf_counter()
    if args.lqr_gain:
        gain = _load_controller(args.lqr_gain)
    else:
        gain = lqr.lqr_controller(_lqr_gain(_linearised(problem), args.h))
    report.timings["riccati"] = time.perf_counter() - t0
    traces = {}
    for name, c in (("moment", ctrl), ("lqr", gain)):
        t1 = time.perf_counter()
        try:
            traces[name] = _simulate(problem, args, c)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, "usage", f"{name} controller: {exc}") from exc
        report.timings[f"simulate_{name}"] = time.perf_counter() - t1
        report.blowups[name] = _blowup_record(traces[name])
    report.controller = ctrl.to_dict()
    report.cost_moment = traces["moment"].final_cost
    report.cost_lqr = traces["lqr"].final_cost
    report.relative_gap = _gap(report.cost_moment, report.cost_lqr)
    files = {name: _emit_trace(tr, out, name, not args.no_plots) for name, tr in traces.items()}
    if not args.no_plots:
        from .plotting import plot_comparison

        plot_comparison(traces, out / "compare_sup.png")
    report.write(out / "compare_report.json")
    print(json.dumps({"cost_moment": report.cost_moment, "cost_lqr": report.cost_lqr,
                      "relative_gap": report.relative_gap, "blowups": report.blowups,
                      "files": files}))
    return EXIT_OK


# --- sweep ---------------------------------------------------------------------

def sweep_specs(form: str, d: int, ms, ps=None, rs=(None,), mrs=(None,)) -> list:
    """Every admissible spec of the grid; ``ps=None`` means all p within budget."""
    specs = []
    for m, r, mr in itertools.product(ms, rs, mrs):
        for p in (ps if ps is not None else range(d + 1)):
            try:
                spec = extraction.ControllerSpec(form, m, p, r, mr)
                spec.check_budget(d)
            except ValueError:
                continue
            specs.append(spec)
    return specs


def _sweep_one(job):
    problem, h, dt, horizon, ctrl = job
    trace = pdesim.run_closed_loop(problem, pdesim.Mesh(h), dt, ctrl, horizon=horizon)
    t09 = min(0.9, float(trace.t[-1]))
    return {
        "cost": trace.final_cost,
        "blowup": trace.blowup,
        "blowup_time": trace.blowup_time,
        "sup_ratio_0.9": float(trace.sup_at(t09) / trace.sup[0]) if not trace.blowup else None,
        "sup_ratio_final": float(trace.sup[-1] / trace.sup[0]),
    }


def rank_key(row: dict):
    """Bounded runs first, then lower cost."""
    return (bool(row["blowup"]), row["cost"] if np.isfinite(row["cost"]) else float("inf"))


def run_sweep(problem, pm, specs, h: float, dt: float, horizon: float = 1.0, jobs: int = 1) -> list:
    """Extract and simulate every spec; rows sorted by :func:`rank_key`."""
    rows, work = [], []
    for spec in specs:
        ctrl = extraction.extract(pm, spec)
        rows.append({"spec": asdict(spec), "coeffs": ctrl.coeffs.tolist(),
                     "coeffs_delta": ctrl.coeffs_delta.tolist(), "mode": ctrl.mode,
                     "controller": ctrl.to_dict()})
        work.append((problem, h, dt, horizon, ctrl))
    if jobs > 1 and len(work) > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, work))
    else:
        results = [_sweep_one(w) for w in work]
    for row, res in zip(rows, results):
        row.update(res)
    return sorted(rows, key=rank_key)


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    problem, _ = _read_config(args.config)
    pm = _read_json_file(sdpsolver.load_pseudo_moments, args.moments, "pseudo-moment")
    out = _out_dir(args.out_dir)
    try:
        ms = _int_list(args.m)
        ps = _int_list(args.p) if args.p else None
        rs = _int_list(args.r) if args.r else [None]
        mrs = _int_list(args.mr) if args.mr else [None]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "usage", f"bad integer list: {exc}") from exc
    specs = sweep_specs(args.form, pm.d, ms, ps, rs, mrs)
    if not specs:
        raise CliError(EXIT_USAGE, "degree-budget", "no controller of the grid fits the relaxation degree")
    jobs = args.jobs or int(os.environ.get(THREADS_ENV, "1"))
    rows = run_sweep(problem, pm, specs, args.h, args.dt, args.horizon, max(1, jobs))
    table = out / "sweep.csv"
    try:
        with open(table, "w") as fh:
            fh.write("rank,form,m,p,r,m_r,mode,blowup,blowup_time,cost,sup_ratio_0.9\n")
            for i, row in enumerate(rows, 1):
                s = row["spec"]
                fh.write(f"{i},{s['form']},{s['m']},{s['p']},{s['r']},{s['m_r']},{row['mode']},"
                         f"{row['blowup']},{row['blowup_time']},{row['cost']!r},{row['sup_ratio_0.9']!r}\n")
        _write_json(out / "sweep.json", {"rows": rows})
        extraction.save_controller(extraction.controller_from_dict(rows[0]["controller"]),
                                   out / "best_controller.json")
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write sweep results: {exc}") from exc
    best = rows[0]
    print(json.dumps({"evaluated": len(rows), "best": best["spec"], "cost": best["cost"],
                      "blowup": best["blowup"], "sup_ratio_0.9": best["sup_ratio_0.9"]}))
    return EXIT_OK


# --- report: whole pipeline ----------------------------------------------------

def cmd_report(args) -> int:
    """Relax, extract, solve the LQR problem, simulate both loops, write everything."""
    problem, config = _read_config(args.config)
    out = _out_dir(args.out_dir)
    report = RunReport(instance=config_to_instance(problem), d=config.d)
    t0 = time.perf_counter()
    program, sol = _relax(problem, config, args.tol, args.max_iter)
    report.timings["relax"] = time.perf_counter() - t0
    report.objective, report.solver_status = sol.objective, sol.status
    pm = sdpsolver.pseudo_moments(program, sol)
    try:
        sdpsolver.save_pseudo_moments(pm, out / "moments.json")
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write moments: {exc}") from exc
    if not sol.ok:
        report.write(out / "report.json")
        _emit_error("solver", f"relaxation ended with status {sol.status}")
        return EXIT_SOLVER
    spec = _spec_from_args(args)
    t1 = time.perf_counter()
    try:
        ctrl = extraction.extract(pm, spec)
    except extraction.DegreeBudgetError as exc:
        raise CliError(EXIT_USAGE, "degree-budget", str(exc)) from exc
    extraction.save_controller(ctrl, out / "controller.json")
    report.controller = ctrl.to_dict()
    report.timings["extract"] = time.perf_counter() - t1
    t2 = time.perf_counter()
    gain_sol = _lqr_gain(_linearised(problem), args.h)
    lqr.save_lqr(gain_sol, out / "lqr_gain.json", pdesim.Mesh(args.h))
    report.timings["riccati"] = time.perf_counter() - t2
    traces = {}
    for name, c in (("moment", ctrl), ("lqr", lqr.lqr_controller(gain_sol))):
        t3 = time.perf_counter()
        traces[name] = _simulate(problem, args, c)
        report.timings[f"simulate_{name}"] = time.perf_counter() - t3
        report.blowups[name] = _blowup_record(traces[name])
        _emit_trace(traces[name], out, name, not args.no_plots)
    if not args.no_plots:
        from .plotting import plot_comparison

        plot_comparison(traces, out / "compare_sup.png")
    report.cost_moment = traces["moment"].final_cost
    report.cost_lqr = traces["lqr"].final_cost
    report.relative_gap = _gap(report.cost_moment, report.cost_lqr)
    report.write(out / "report.json")
    print(json.dumps({k: v for k, v in report.to_dict().items() if k not in ("instance", "controller")}))
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _sim_flags(p, extend: float | None = None):
    p.add_argument("--h", type=float, default=0.01, help="element size (default 0.01)")
    p.add_argument("--dt", type=float, default=1e-4, help="time step (default 1e-4)")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--extend-tol", type=float, default=extend,
                   help="continue past the horizon until 0.1-chunks add less than this to the cost")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")


def _solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=200)


def _form_flags(p, required: bool = True):
    p.add_argument("--form", choices=extraction.FORMS, required=required, default=None if required else "linear")
    p.add_argument("--m", type=int, required=required, default=None if required else 0)
    p.add_argument("--p", type=int, required=required, default=None if required else 5)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--mr", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatsos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("relax", help="assemble and solve the moment relaxation")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="pseudo-moment dump (JSON)")
    p.add_argument("--degree", type=int, help="override relaxation_degree")
    p.add_argument("--sdpa", help="also export the conic program in SDPA sparse format")
    p.add_argument("-v", "--verbose", action="store_true")
    _solver_flags(p)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("extract", help="recover a feedback law from pseudo-moments")
    p.add_argument("moments")
    p.add_argument("-o", "--output", required=True)
    _form_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("simulate", help="closed-loop run with a controller file (zero control if omitted)")
    p.add_argument("config")
    p.add_argument("--controller")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--name", default="run")
    _sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lqr", help="LQR gain of the linearised problem and its closed loop")
    p.add_argument("config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nonlinear", action="store_true",
                   help="simulate the gain on the configured (nonlinear) dynamics")
    _sim_flags(p)
    p.set_defaults(func=cmd_lqr)

    p = sub.add_parser("compare", help="moment controller against LQR on the configured dynamics")
    p.add_argument("config")
    p.add_argument("controller")
    p.add_argument("--lqr-gain", help="precomputed gain file; solved on the fly otherwise")
    p.add_argument("--moments", help="pseudo-moment dump, to report the lower bound")
    p.add_argument("--out-dir", required=True)
    _sim_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="grid search over controller shapes, ranked by simulated cost")
    p.add_argument("config")
    p.add_argument("moments")
    p.add_argument("--form", choices=extraction.FORMS, default="semilinear")
    p.add_argument("--m", default="0,1", help="comma-separated kernel degrees")
    p.add_argument("--p", default="", help="comma-separated p values (default: all admissible)")
    p.add_argument("--r", default="", help="comma-separated powers for the semilinear term")
    p.add_argument("--mr", default="", help="comma-separated degrees of the semilinear kernel")
    p.add_argument("--jobs", type=int, default=0, help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--horizon", type=float, default=1.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="full pipeline with CSV traces, figures and a run report")
    p.add_argument("config")
    p.add_argument("--out-dir", required=True)
    _form_flags(p, required=False)
    _solver_flags(p)
    _sim_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def _thread_limit() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise CliError(EXIT_USAGE, "usage", f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise CliError(EXIT_USAGE, "usage", f"{THREADS_ENV} must be positive, got {n}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with threadpool_limits(limits=_thread_limit()):
            return args.func(args)
    except CliError as exc:
        _emit_error(exc.category, str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
