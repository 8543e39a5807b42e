"""P1 finite elements in space, BDF2 in time, for closed-loop runs.

The semi-discrete system on the interior nodes reads

    M Y' = A Y + B U + M f(Y)

where the Dirichlet value ``U`` at x = 1 has been eliminated into ``B`` and
``f`` is the nonlinear part of the reaction, interpolated at the nodes.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .problem import HeatControlProblem

BLOWUP_LEVEL = 1e3
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 20

# u = controller(t, x_nodes, y_nodes) with boundary values included
Control = Callable[[float, np.ndarray, np.ndarray], float]


def zero_control(t: float, x: np.ndarray, y: np.ndarray) -> float:
    return 0.0


@dataclass(frozen=True)
class Mesh:
    h: float

    def __post_init__(self):
        n = round(1 / self.h)
        if self.h <= 0 or abs(n * self.h - 1) > 1e-9 or n < 2:
            raise ValueError(f"h must be 1/n for an integer n >= 2, got {self.h}")

    @property
    def n_elements(self) -> int:
        return round(1 / self.h)

    @property
    def N(self) -> int:
        return self.n_elements - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_elements + 1)


def _tridiag(n: int, lower: float, diag: float, upper: float) -> sp.csr_matrix:
    return sp.diags([np.full(n - 1, lower), np.full(n, diag), np.full(n - 1, upper)], [-1, 0, 1], format="csr")


def full_mass(mesh: Mesh) -> sp.csr_matrix:
    """Mass matrix over all nodes including both boundaries (for quadrature)."""
    n = mesh.n_elements + 1
    h = mesh.h
    M = _tridiag(n, h / 6, 4 * h / 6, h / 6).tolil()
    M[0, 0] = M[-1, -1] = 2 * h / 6
    return M.tocsr()


def assemble_fem(problem: HeatControlProblem, mesh: Mesh):
    """(M, A, B) on the interior nodes; A = -lam K + alpha M, B = boundary column."""
    N, h = mesh.N, mesh.h
    M = _tridiag(N, h / 6, 4 * h / 6, h / 6)
    K = _tridiag(N, -1 / h, 2 / h, -1 / h)
    A = (-problem.lam * K + problem.alpha * M).tocsr()
    B = np.zeros(N)
    # coupling of the last interior node to the boundary node at x = 1
    B[-1] = problem.lam / h + problem.alpha * h / 6
    return M, A, B


@dataclass
class SimTrace:
    x: np.ndarray  # nodes, boundaries included
    t: np.ndarray  # every time step
    U: np.ndarray  # control at every step
    sup: np.ndarray  # sup-norm of the profile at every step
    cost: np.ndarray  # running cost at every step
    snap_t: np.ndarray  # snapshot times
    Y: np.ndarray  # snapshots, shape (len(snap_t), len(x))
    blowup: bool = False
    blowup_time: float | None = None
    blowup_reason: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def final_cost(self) -> float:
        return float(self.cost[-1])

    def profile_at(self, time: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.snap_t - time)))
        return self.Y[k]

    def sup_at(self, time: float) -> float:
        k = int(np.argmin(np.abs(self.t - time)))
        return float(self.sup[k])


def _banded(J: sp.spmatrix) -> np.ndarray:
    n = J.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = J.diagonal(1)
    ab[1] = J.diagonal(0)
    ab[2, :-1] = J.diagonal(-1)
    return ab


class _Stepper:
    """Implicit-Euler start then BDF2, fully implicit in the reaction."""

    def __init__(self, problem: HeatControlProblem, mesh: Mesh, dt: float):
        self.problem, self.mesh, self.dt = problem, mesh, dt
        self.M, self.A, self.B = assemble_fem(problem, mesh)
        h = mesh.h
        self.Mb = h / 6  # mass coupling of the last interior node to x = 1
        g = problem.nonlinear_part()
        self.g = [float(g.coeff((k,))) for k in range(g.degree + 1)] if not g.is_zero() else []
        self.dg = [k * c for k, c in enumerate(self.g)][1:]
        # system matrices for the Euler start (1) and BDF2 (1.5) leading coefficients
        self.L = {c: (c * self.M - dt * self.A).tocsr() for c in (1.0, 1.5)}
        self.Lb = {c: _banded(L) for c, L in self.L.items()}

    def _poly(self, coeffs, y):
        out = np.zeros_like(y)
        for c in reversed(coeffs):
            out = out * y + c
        return out

    def step(self, Y1: np.ndarray, Y0: np.ndarray | None, U: float):
        """One step to the new interior state; returns (Y, ok)."""
        dt, M, B = self.dt, self.M, self.B
        if Y0 is None:
            lead, rhs = 1.0, M @ Y1
        else:
            lead, rhs = 1.5, 2 * (M @ Y1) - 0.5 * (M @ Y0)
        rhs = rhs + dt * B * U
        L = self.L[lead]
        if not self.g:
            return la.solve_banded((1, 1), self.Lb[lead], rhs), True
        gU = self._poly(self.g, np.array([U]))[0]
        Y = Y1.copy()
        scale = max(1.0, np.abs(rhs).max())
        for _ in range(NEWTON_MAXIT):
            gY = self._poly(self.g, Y)
            F = L @ Y - rhs - dt * (M @ gY)
            F[-1] -= dt * self.Mb * gU
            if not np.all(np.isfinite(F)):
                return Y, False
            if np.abs(F).max() <= NEWTON_TOL * scale:
                return Y, True
            J = L - dt * (M @ sp.diags(self._poly(self.dg, Y)))
            try:
                Y = Y - la.solve_banded((1, 1), _banded(J), F)
            except (la.LinAlgError, ValueError):
                return Y, False
        gY = self._poly(self.g, Y)
        F = L @ Y - rhs - dt * (M @ gY)
        F[-1] -= dt * self.Mb * gU
        return Y, bool(np.all(np.isfinite(F)) and np.abs(F).max() <= NEWTON_TOL * scale)


def initial_profile(problem: HeatControlProblem, mesh: Mesh) -> np.ndarray:
    x = mesh.nodes
    return np.array([float(problem.y0(xi)) for xi in x])


def run_closed_loop(problem: HeatControlProblem, mesh: Mesh, dt: float, controller: Control | None = None,
                    horizon: float = 1.0, y_init: np.ndarray | None = None, snapshots: int = 200,
                    extend_tol: float | None = None, max_horizon: float = 20.0) -> SimTrace:
    """Integrate from the initial profile to ``horizon`` (or blow-up).

    The control applied on a step is computed from the previous accepted
    profile.  With ``extend_tol`` the run continues past ``horizon`` in
    chunks of 0.1 until a chunk adds less than ``extend_tol`` to the cost.
    """
    controller = controller or zero_control
    x = mesh.nodes
    Y = initial_profile(problem, mesh) if y_init is None else np.asarray(y_init, dtype=float).copy()
    if Y.shape != x.shape:
        raise ValueError(f"initial profile has {Y.size} values, mesh has {x.size} nodes")
    stepper = _Stepper(problem, mesh, dt)
    Mf = full_mass(mesh)
    R = problem.R

    def density(y_full, u):
        return 0.5 * float(y_full @ (Mf @ y_full)) + 0.5 * R * u * u

    n_steps = int(round(horizon / dt))
    stride = max(1, n_steps // snapshots)
    # U^{n+1} is computed from the accepted profile at t_n
    ts, Us, sups, costs = [0.0], [float(Y[-1])], [float(np.abs(Y).max())], [0.0]
    snap_t, snaps = [0.0], [Y.copy()]
    prev_density = density(Y, Us[0])
    prev_int = None
    full = Y
    blowup, t_blow, reason = False, None, ""
    k = 0
    target = n_steps
    chunk = int(round(0.1 / dt))
    chunk_start = 0.0
    while True:
        while k < target:
            u = float(controller(k * dt, x, full))
            t_new = (k + 1) * dt
            Y_new, ok = stepper.step(full[1:-1], prev_int, u)
            if not ok:
                blowup, t_blow, reason = True, t_new, "newton"
                break
            prev_int = full[1:-1]
            full = np.concatenate(([0.0], Y_new, [u]))
            sup = float(np.abs(full).max())
            dens = density(full, u)
            costs.append(costs[-1] + 0.5 * dt * (prev_density + dens))
            prev_density = dens
            ts.append(t_new)
            Us.append(u)
            sups.append(sup)
            k += 1
            if k % stride == 0:
                snap_t.append(t_new)
                snaps.append(full)
            if not math.isfinite(sup) or sup > BLOWUP_LEVEL:
                blowup, t_blow, reason = True, t_new, "sup-norm"
                break
        if blowup or extend_tol is None:
            break
        if k > n_steps and costs[-1] - chunk_start < extend_tol:
            break
        if k * dt >= max_horizon - 1e-12:
            break
        chunk_start = costs[-1]
        target = k + chunk
    if snap_t[-1] != ts[-1]:
        snap_t.append(ts[-1])
        snaps.append(full)
    meta = {"h": mesh.h, "dt": dt, "horizon": ts[-1], "R": R}
    return SimTrace(x, np.array(ts), np.array(Us), np.array(sups), np.array(costs), np.array(snap_t),
                    np.array(snaps), blowup, t_blow, reason, meta)


def trace_cost(trace: SimTrace, R: float) -> float:
    """Cost recomputed from the stored snapshots and control samples."""
    mesh = Mesh(trace.x[1] - trace.x[0])
    Mf = full_mass(mesh)
    space = np.array([0.5 * y @ (Mf @ y) for y in trace.Y])
    u = np.interp(trace.snap_t, trace.t, trace.U)
    return float(np.trapezoid(space + 0.5 * R * u**2, trace.snap_t))


# --- trace files -----------------------------------------------------------------

def write_trace(trace: SimTrace, prefix: str | Path) -> dict:
    """Write ``<prefix>_y.csv`` (t,x,y), ``<prefix>_u.csv`` (t,u) and ``<prefix>_summary.json``."""
    prefix = Path(prefix)
    paths = {
        "y": prefix.with_name(prefix.name + "_y.csv"),
        "u": prefix.with_name(prefix.name + "_u.csv"),
        "summary": prefix.with_name(prefix.name + "_summary.json"),
    }
    with open(paths["y"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for tk, row in zip(trace.snap_t, trace.Y):
            for xi, yi in zip(trace.x, row):
                w.writerow([repr(float(tk)), repr(float(xi)), repr(float(yi))])
    with open(paths["u"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u", "sup", "cost"])
        for row in zip(trace.t, trace.U, trace.sup, trace.cost):
            w.writerow([repr(float(v)) for v in row])
    paths["summary"].write_text(json.dumps(summary(trace), indent=2) + "\n")
    return paths


def summary(trace: SimTrace) -> dict:
    return {
        "final_cost": trace.final_cost,
        "final_time": float(trace.t[-1]),
        "blowup": trace.blowup,
        "blowup_time": trace.blowup_time,
        "blowup_reason": trace.blowup_reason,
        "initial_sup": float(trace.sup[0]),
        "final_sup": float(trace.sup[-1]),
        **trace.meta,
    }


def read_trace(prefix: str | Path) -> SimTrace:
    prefix = Path(prefix)
    with open(prefix.with_name(prefix.name + "_y.csv"), newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    data = np.array(rows, dtype=float)
    snap_t = np.unique(data[:, 0])
    x = data[data[:, 0] == snap_t[0], 1]
    Y = data[:, 2].reshape(len(snap_t), len(x))
    with open(prefix.with_name(prefix.name + "_u.csv"), newline="") as fh:
        urows = np.array(list(csv.reader(fh))[1:], dtype=float)
    doc = json.loads(prefix.with_name(prefix.name + "_summary.json").read_text())
    meta = {k: doc[k] for k in ("h", "dt", "horizon", "R") if k in doc}
    return SimTrace(x, urows[:, 0], urows[:, 1], urows[:, 2], urows[:, 3], snap_t, Y,
                    doc["blowup"], doc["blowup_time"], doc["blowup_reason"], meta)
