"""Primal-dual interior-point solver for block-diagonal linear matrix inequalities.

Problem form (the moment relaxation after rescaling)::

    minimize    c.x
    subject to  A x = b
                F_j(x) = F0_j + mat(G_j x)  is PSD,  j = 1..J

Dual::

    maximize    b.y - sum_j F0_j . Z_j
    subject to  sum_j G_j^T vec(Z_j) + A^T y = c,   Z_j PSD

The method is infeasible-start, uses Nesterov-Todd scaling and a Mehrotra
predictor-corrector step, in the scaled-variable form of Vandenberghe's
cone-LP notes.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max-iter"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class ConeBlock:
    G: sp.csr_matrix  # (size*size, n)
    size: int
    F0: np.ndarray | None = None
    label: str = ""

    def value(self, x: np.ndarray) -> np.ndarray:
        M = (self.G @ x).reshape(self.size, self.size)
        if self.F0 is not None:
            M = M + self.F0
        return M


@dataclass
class ConicProgram:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    blocks: list

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass
class IterateRecord:
    iteration: int
    pobj: float
    dobj: float
    pres: float
    dres: float
    gap: float  # sum_j S_j . Z_j
    slack: float  # bound on |pobj - dobj - gap| due to infeasibility


@dataclass
class ConicSolution:
    status: str
    s: np.ndarray  # original-coordinate moments (equal to x for plain conic programs)
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    x: np.ndarray | None = None  # solver coordinates
    y: np.ndarray | None = None
    Z: list = field(default_factory=list)
    history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def relaxation_to_conic(program) -> tuple[ConicProgram, sp.csr_matrix]:
    """Rescale a RelaxationProgram; returns the conic program and T (s = T x)."""
    T = program.transform()
    A = sp.csr_matrix(program.A @ T)
    c = np.asarray(T.T @ program.c).ravel()
    blocks = [ConeBlock(cone.G, cone.size, None, cone.label) for cone in program.cones]
    return ConicProgram(c, A, np.asarray(program.b, dtype=float), blocks), T


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Drop linearly dependent rows; report inconsistency of the dropped ones."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0), True
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        zero = norms == 0
        if np.any(np.abs(b[zero]) > 1e-12):
            return np.arange(0), False
        norms[zero] = 1.0
    A, b = A / norms[:, None], b / norms
    _, R, piv = la.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    keep = np.sort(piv[:rank])
    x0 = la.lstsq(A[keep], b[keep])[0] if rank else np.zeros(A.shape[1])
    consistent = np.linalg.norm(A @ x0 - b) <= 1e-8 * (1 + np.linalg.norm(b))
    return keep, consistent


def _chol(M: np.ndarray):
    try:
        return la.cho_factor(M, lower=True, check_finite=False)
    except la.LinAlgError:
        reg = 1e-13 * max(np.trace(M) / M.shape[0], 1e-300)
        for _ in range(8):
            try:
                return la.cho_factor(M + reg * np.eye(M.shape[0]), lower=True, check_finite=False)
            except la.LinAlgError:
                reg *= 100
        raise


def _max_step(Lambda: np.ndarray, dX: np.ndarray) -> float:
    """Largest a with Lambda + a*dX PSD (Lambda diagonal positive, given as vector)."""
    s = 1 / np.sqrt(Lambda)
    ev = la.eigvalsh(s[:, None] * dX * s[None, :])
    lo = ev[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _eliminate_free(prog: ConicProgram):
    """Remove variables that no cone touches by solving for them from A x = b.

    Returns (reduced program, objective offset, reconstruction); the
    reconstruction maps reduced (x, y) back to the full ones and is None when
    nothing was eliminated.  Raises _Unbounded when the cost decreases along
    a free direction.
    """
    n = prog.n
    touched = np.zeros(n, dtype=bool)
    for blk in prog.blocks:
        touched[np.unique(blk.G.indices)] = True
    free = np.flatnonzero(~touched)
    kept = np.flatnonzero(touched)
    A = prog.A.toarray() if sp.issparse(prog.A) else np.asarray(prog.A, dtype=float)
    b = np.asarray(prog.b, dtype=float)
    c = np.asarray(prog.c, dtype=float)
    if free.size == 0:
        return prog, 0.0, None
    Af, Ac = A[:, free], A[:, kept]
    cf = c[free]
    U, sv, Vt = la.svd(Af, full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * max(sv[0] if sv.size else 0, 1e-300)))
    # a cost component along the null space of Af makes the program unbounded
    if rank < free.size and np.linalg.norm(Vt[rank:] @ cf) > 1e-10 * (1 + np.linalg.norm(cf)):
        raise _Unbounded
    pinv = (Vt[:rank].T / sv[:rank]) @ U[:, :rank].T
    Q2 = U[:, rank:]
    yf = pinv.T @ cf
    reduced = ConicProgram(
        c[kept] - Ac.T @ yf,
        Q2.T @ Ac,
        Q2.T @ b,
        [ConeBlock(sp.csr_matrix(blk.G[:, kept]), blk.size, blk.F0, blk.label) for blk in prog.blocks],
    )

    def restore(xk, yk):
        x = np.zeros(n)
        x[kept] = xk
        x[free] = pinv @ (b - Ac @ xk)
        return x, Q2 @ yk + yf

    return reduced, float(yf @ b), restore


class _Unbounded(Exception):
    pass


def solve_conic(prog: ConicProgram, tol: float = 1e-7, max_iter: int = 200,
                callback=None, refine: int = 2) -> ConicSolution:
    """Primal-dual interior-point method for ``min c.x, A x = b, F0_j + G_j x PSD``."""
    n = prog.n
    try:
        reduced, offset, restore = _eliminate_free(prog)
    except _Unbounded:
        return ConicSolution(UNBOUNDED, np.full(n, np.nan), -np.inf, np.nan, np.nan, np.nan,
                             np.nan, 0, x=np.full(n, np.nan))
    if restore is None:
        return _solve_core(prog, tol, max_iter, callback, refine)
    def shifted(rec):
        rec.pobj += offset
        rec.dobj += offset
        if callback is not None:
            callback(rec)

    sol = _solve_core(reduced, tol, max_iter, shifted, refine)
    if sol.y is None:
        sol.x = sol.s = np.full(n, np.nan)
        return sol
    x, y = restore(sol.x, sol.y)
    sol.x = sol.s = x
    sol.y = y
    sol.objective = float(np.asarray(prog.c) @ x)
    sol.dual_objective = float(np.asarray(prog.b) @ y - sum(
        np.sum(blk.F0 * Zj) for blk, Zj in zip(prog.blocks, sol.Z) if blk.F0 is not None))
    return sol


def _solve_core(prog: ConicProgram, tol: float, max_iter: int, callback, refine: int) -> ConicSolution:
    n = prog.n
    A_full = prog.A.toarray() if sp.issparse(prog.A) else np.asarray(prog.A, dtype=float)
    b_full = np.asarray(prog.b, dtype=float)
    c = np.asarray(prog.c, dtype=float)
    keep, consistent = _independent_rows(A_full, b_full)
    A, b = A_full[keep], b_full[keep]
    if not consistent:
        return ConicSolution(INFEASIBLE, np.full(n, np.nan), np.nan, np.nan, np.inf, np.inf,
                             np.nan, 0, x=np.full(n, np.nan))
    norms = np.linalg.norm(A, axis=1)
    A = A / norms[:, None]
    b = b / norms
    m = A.shape[0]

    blocks = prog.blocks
    # restrict each block to its nonzero columns
    local = []
    for blk in blocks:
        cols = np.unique(blk.G.indices)
        local.append((cols, sp.csr_matrix(blk.G[:, cols]), blk.G.T.tocsr()))
    nu = sum(blk.size for blk in blocks)
    F0 = [blk.F0 if blk.F0 is not None else np.zeros((blk.size, blk.size)) for blk in blocks]

    x = np.zeros(n)
    y = np.zeros(m)
    S = [np.eye(blk.size) for blk in blocks]
    Z = [np.eye(blk.size) for blk in blocks]
    bnorm, cnorm = 1 + np.linalg.norm(b), 1 + np.linalg.norm(c)
    history = []
    status = MAX_ITER

    def residuals(x, y, S, Z):
        rS = [Sj - (F0j + (blk.G @ x).reshape(blk.size, blk.size)) for Sj, F0j, blk in zip(S, F0, blocks)]
        rA = b - A @ x
        GtZ = np.zeros(n)
        for (_, _, GT), Zj in zip(local, Z):
            GtZ += GT @ Zj.ravel()
        rd = c - GtZ - (A.T @ y if m else 0)
        return rS, rA, rd

    it = 0
    for it in range(max_iter + 1):
        rS, rA, rd = residuals(x, y, S, Z)
        pobj = float(c @ x)
        dobj = float(b @ y - sum(np.sum(F0j * Zj) for F0j, Zj in zip(F0, Z)))
        gap = float(sum(np.sum(Sj * Zj) for Sj, Zj in zip(S, Z)))
        pres = np.sqrt(rA @ rA + sum(np.sum(r * r) for r in rS)) / bnorm
        dres = np.linalg.norm(rd) / cnorm
        slack = abs(x @ rd) + abs(sum(np.sum(r * Zj) for r, Zj in zip(rS, Z))) + abs(y @ rA)
        rec = IterateRecord(it, pobj, dobj, pres, dres, gap, slack)
        history.append(rec)
        if callback is not None:
            callback(rec)
        log.debug("it %3d pobj %.9e dobj %.9e pres %.2e dres %.2e gap %.2e", it, pobj, dobj, pres, dres, gap)
        relgap = max(gap, abs(pobj - dobj)) / (1 + abs(pobj) + abs(dobj))
        if pres <= tol and dres <= tol and relgap <= tol:
            status = OPTIMAL
            break
        # certificates of infeasibility on normalised iterates
        dual_ray = b @ y - sum(np.sum(F0j * Zj) for F0j, Zj in zip(F0, Z))
        if dual_ray > 0 and it > 5:
            if np.linalg.norm(c - rd) / dual_ray <= tol and pres > tol:
                status = INFEASIBLE
                break
        if pobj < 0 and it > 5 and dres > tol:
            scale_ = -pobj
            Gx = [(blk.G @ x).reshape(blk.size, blk.size) for blk in blocks]
            if (np.linalg.norm(A @ x) <= tol * scale_
                    and all(la.eigvalsh(g)[0] >= -tol * scale_ for g in Gx)):
                status = UNBOUNDED
                break
        if it == max_iter:
            break

        # Nesterov-Todd scaling per block
        try:
            scal = []
            H = np.zeros((n, n))
            for (cols, Gl, _), Sj, Zj in zip(local, S, Z):
                Ls = la.cholesky(Sj, lower=True)
                Lz = la.cholesky(Zj, lower=True)
                Uu, lam, Vt = la.svd(Lz.T @ Ls)
                R = (Ls @ Vt.T) / np.sqrt(lam)[None, :]
                Rinv = (Uu / np.sqrt(lam)[None, :]).T @ Lz.T
                Winv = Rinv.T @ Rinv
                scal.append((lam, R, Rinv, Winv))
                K = np.kron(Winv, Winv)
                Y_ = Gl.T @ K
                H[np.ix_(cols, cols)] += (Gl.T @ Y_.T).T
            Hf = _chol(H)
            if m:
                HiAt = la.cho_solve(Hf, A.T, check_finite=False)
                Mf = _chol(A @ HiAt)
        except (la.LinAlgError, ValueError) as exc:
            log.warning("factorization failed at iteration %d: %s", it, exc)
            status = NUMERICAL_FAILURE
            break

        def reduced_solve(g, r):
            # [H -A^T; A 0] [dx; dy] = [g; r]
            if not m:
                return la.cho_solve(Hf, g, check_finite=False), np.zeros(0)
            Hig = la.cho_solve(Hf, g, check_finite=False)
            dy = la.cho_solve(Mf, r - A @ Hig, check_finite=False)
            return Hig + HiAt @ dy, dy

        def newton(Ds):
            g = -rd.copy()
            for (cols, Gl, _), (lam, R, Rinv, Winv), D, r in zip(local, scal, Ds, rS):
                Tm = Rinv.T @ D @ Rinv + Winv @ r @ Winv
                g[cols] += Gl.T @ Tm.ravel()
            dx, dy = reduced_solve(g, rA)
            for _ in range(refine):
                # iterative refinement against the unfactored system
                ex, ey = reduced_solve(g - H @ dx + (A.T @ dy if m else 0), rA - A @ dx)
                dx, dy = dx + ex, dy + ey
            dS, dZ = [], []
            for blk, (lam, R, Rinv, Winv), D, r in zip(blocks, scal, Ds, rS):
                dSj = (blk.G @ dx).reshape(blk.size, blk.size) - r
                dSj = (dSj + dSj.T) / 2
                dZj = Rinv.T @ D @ Rinv - Winv @ dSj @ Winv
                dZ.append((dZj + dZj.T) / 2)
                dS.append(dSj)
            return dx, dy, dS, dZ

        def steps(dS, dZ):
            ap = ad = np.inf
            for (lam, R, Rinv, Winv), dSj, dZj in zip(scal, dS, dZ):
                ap = min(ap, _max_step(lam, Rinv @ dSj @ Rinv.T))
                ad = min(ad, _max_step(lam, R.T @ dZj @ R))
            return ap, ad

        # predictor
        Ds = [-np.diag(lam) for lam, *_ in scal]
        dx, dy, dS, dZ = newton(Ds)
        ap, ad = steps(dS, dZ)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu = gap / nu
        gap_aff = sum(np.sum((Sj + ap * dSj) * (Zj + ad * dZj)) for Sj, dSj, Zj, dZj in zip(S, dS, Z, dZ))
        sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3 if gap > 0 else 0.0

        # corrector
        Ds = []
        for (lam, R, Rinv, Winv), dSj, dZj in zip(scal, dS, dZ):
            a = Rinv @ dSj @ Rinv.T
            bb = R.T @ dZj @ R
            rhs = sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - (a @ bb + bb @ a) / 2
            Ds.append(2 * rhs / (lam[:, None] + lam[None, :]))
        dx, dy, dS, dZ = newton(Ds)
        ap, ad = steps(dS, dZ)
        ap, ad = min(1.0, 0.98 * ap), min(1.0, 0.98 * ad)
        x = x + ap * dx
        S = [Sj + ap * dSj for Sj, dSj in zip(S, dS)]
        y = y + ad * dy
        Z = [Zj + ad * dZj for Zj, dZj in zip(Z, dZ)]
        S = [(Sj + Sj.T) / 2 for Sj in S]
        Z = [(Zj + Zj.T) / 2 for Zj in Z]

    rec = history[-1]
    y_full = np.zeros(len(b_full))
    y_full[keep] = y / norms
    return ConicSolution(status, x.copy(), rec.pobj, rec.dobj, rec.pres, rec.dres, rec.gap,
                         it, x=x, y=y_full, Z=Z, history=history)


def solve(program, tol: float = 1e-7, max_iter: int = 200, callback=None) -> ConicSolution:
    """Solve a RelaxationProgram (or a bare ConicProgram).

    For a relaxation the returned ``s`` holds original-coordinate moments and
    ``x`` the rescaled ones the cones act on.
    """
    if isinstance(program, ConicProgram):
        return solve_conic(program, tol, max_iter, callback)
    if program.c is None or not program.cones:
        raise ValueError("program needs cost and cones before solving")
    conic, T = relaxation_to_conic(program)
    sol = solve_conic(conic, tol, max_iter, callback)
    sol.s = np.asarray(T @ sol.x).ravel()
    sol.primal_residual = float(np.linalg.norm(program.A @ sol.s - program.b) / (1 + np.linalg.norm(program.b)))
    sol.objective = float(program.c @ sol.s)
    return sol


# --- pseudo-moments ------------------------------------------------------------

@dataclass
class PseudoMoments:
    """Truncated moment vectors of the five measures, in original coordinates."""

    d: int
    variables: dict  # measure -> tuple of variable names
    fixed: dict  # measure -> {variable: face value}
    values: dict  # measure -> {multi-index: value}
    objective: float = float("nan")
    status: str = ""
    config: dict = field(default_factory=dict)

    def moment(self, measure: str, alpha) -> float:
        """Pseudo-moment of the monomial ``alpha`` of ``measure`` (KeyError past degree d)."""
        return self.values[measure][tuple(int(a) for a in alpha)]

    def moment_of(self, measure: str, exponents: dict) -> float:
        """Moment of ``prod v**e`` given by variable name; fixed variables are substituted."""
        alpha = [0] * len(self.variables[measure])
        factor = 1.0
        for v, e in exponents.items():
            if not e:
                continue
            if v in self.fixed[measure]:
                factor *= float(self.fixed[measure][v]) ** e
            else:
                alpha[self.variables[measure].index(v)] = e
        return factor * self.moment(measure, alpha) if factor else 0.0


def pseudo_moments(program, solution: ConicSolution) -> PseudoMoments:
    from .problem import config_to_dict

    values, variables, fixed = {}, {}, {}
    for lay in program.layout:
        block = solution.s[lay.offset:lay.offset + lay.size]
        values[lay.name] = {alpha: float(v) for alpha, v in zip(lay.monomials, block)}
        variables[lay.name] = tuple(lay.variables)
        fixed[lay.name] = dict(lay.fixed)
    return PseudoMoments(program.d, variables, fixed, values, float(solution.objective),
                         solution.status, config_to_dict(program.problem, program.config))


def save_pseudo_moments(pm: PseudoMoments, path: str | Path) -> None:
    """JSON dump: a header (degree, objective, status, config) and per-measure
    lists of ``[multi-index, value]`` pairs in graded-lex order."""
    doc = {
        "format": "heatsos-pseudo-moments",
        "d": pm.d,
        "objective": pm.objective,
        "status": pm.status,
        "config": pm.config,
        "measures": {
            name: {
                "variables": list(pm.variables[name]),
                "fixed": pm.fixed[name],
                "moments": [[list(alpha), v] for alpha, v in pm.values[name].items()],
            }
            for name in pm.values
        },
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_pseudo_moments(path: str | Path) -> PseudoMoments:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "heatsos-pseudo-moments":
        raise ValueError(f"{path}: not a pseudo-moment dump")
    variables, fixed, values = {}, {}, {}
    for name, rec in doc["measures"].items():
        variables[name] = tuple(rec["variables"])
        fixed[name] = dict(rec["fixed"])
        values[name] = {tuple(alpha): float(v) for alpha, v in rec["moments"]}
    return PseudoMoments(int(doc["d"]), variables, fixed, values, float(doc["objective"]),
                         doc.get("status", ""), doc.get("config", {}))


# --- SDPA sparse interchange -------------------------------------------------
#
# SDPA primal form:  min sum_i c_i x_i  s.t.  sum_i F_i x_i - F_0 PSD.
# Our A x = b rows become a diagonal block holding a_r.x - b_r >= 0 and
# -a_r.x + b_r >= 0 (block size written as -2m).  Constant terms F0 of our
# blocks enter as -F_0 (SDPA subtracts F_0).

def export_interchange(prog, path: str | Path) -> None:
    """Write a program in SDPA sparse format (``.dat-s``)."""
    if not isinstance(prog, ConicProgram):
        prog, _ = relaxation_to_conic(prog)
    A = sp.csr_matrix(prog.A)
    m, n = A.shape
    sizes = [blk.size for blk in prog.blocks]
    if m:
        sizes.append(-2 * m)
    lines = [f"{n}", f"{len(sizes)}", " ".join(str(s) for s in sizes) if sizes else "0",
             " ".join(f"{float(v)!r}" for v in prog.c) if n else ""]
    records = []
    for bi, blk in enumerate(prog.blocks, start=1):
        if blk.F0 is not None:
            for i in range(blk.size):
                for j in range(i, blk.size):
                    if blk.F0[i, j] != 0:
                        records.append((0, bi, i + 1, j + 1, -float(blk.F0[i, j])))
        G = blk.G.tocsc()
        for var in range(n):
            start, stop = G.indptr[var], G.indptr[var + 1]
            for r, v in zip(G.indices[start:stop], G.data[start:stop]):
                i, j = divmod(int(r), blk.size)
                if i <= j and v != 0:
                    records.append((var + 1, bi, i + 1, j + 1, float(v)))
    if m:
        lp = len(prog.blocks) + 1
        b = np.asarray(prog.b, dtype=float)
        for r in range(m):
            if b[r] != 0:
                records.append((0, lp, 2 * r + 1, 2 * r + 1, float(b[r])))
                records.append((0, lp, 2 * r + 2, 2 * r + 2, -float(b[r])))
        coo = A.tocoo()
        for r, var, v in zip(coo.row, coo.col, coo.data):
            if v != 0:
                records.append((int(var) + 1, lp, 2 * r + 1, 2 * r + 1, float(v)))
                records.append((int(var) + 1, lp, 2 * r + 2, 2 * r + 2, -float(v)))
    records.sort()
    lines += [f"{k} {bl} {i} {j} {v!r}" for k, bl, i, j, v in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_interchange(path: str | Path) -> ConicProgram:
    """Parse an SDPA sparse file written by :func:`export_interchange`."""
    raw = [ln.split("*")[0].strip() for ln in Path(path).read_text().splitlines()]
    raw = [ln for ln in raw if ln and not ln.startswith('"')]
    n = int(raw[0].split()[0])
    nblocks = int(raw[1].split()[0])
    sizes = [int(float(s)) for s in raw[2].replace(",", " ").replace("{", " ").replace("}", " ").split()][:nblocks]
    pos = 3
    c = np.zeros(n)
    if n:
        c = np.array([float(v) for v in raw[3].replace(",", " ").split()[:n]])
        pos = 4
    elif pos < len(raw) and len(raw[pos].split()) < 5:
        pos = 4
    psd = [(k, s) for k, s in enumerate(sizes, start=1) if s > 0]
    lp = [(k, -s) for k, s in enumerate(sizes, start=1) if s < 0]
    G = {k: {} for k, _ in psd}
    F0 = {k: np.zeros((s, s)) for k, s in psd}
    lp_entries = {}
    for ln in raw[pos:]:
        k, bl, i, j, v = ln.split()
        k, bl, i, j, v = int(k), int(bl), int(i) - 1, int(j) - 1, float(v)
        if bl in G:
            size = dict(psd)[bl]
            if k == 0:
                F0[bl][i, j] = F0[bl][j, i] = -v
            else:
                G[bl][(i * size + j, k - 1)] = v
                G[bl][(j * size + i, k - 1)] = v
        else:
            lp_entries[(bl, i, k)] = v
    blocks = []
    for k, size in psd:
        entries = G[k]
        rows = [r for r, _ in entries]
        cols = [col for _, col in entries]
        Gm = sp.csr_matrix((list(entries.values()), (rows, cols)), shape=(size * size, n))
        f0 = F0[k] if np.any(F0[k]) else None
        blocks.append(ConeBlock(Gm, size, f0))
    m = sum(s for _, s in lp) // 2
    A = np.zeros((m, n))
    b = np.zeros(m)
    if lp:
        bl = lp[0][0]
        for (blk, i, k), v in lp_entries.items():
            if blk != bl or i % 2:
                continue
            r = i // 2
            if k == 0:
                b[r] = v
            else:
                A[r, k - 1] = v
    return ConicProgram(c, sp.csr_matrix(A), b, blocks)
