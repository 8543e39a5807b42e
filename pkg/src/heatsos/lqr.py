"""Linear-quadratic regulator for the semi-discrete heat equation.

For ``M Y' = A Y + B U`` with cost ``1/2 int Y'QY + R/2 int U^2`` we work
with ``At = M^-1 A`` and ``Bt = M^-1 B`` and solve

    At' P + P At - P Bt R^-1 Bt' P + Q = 0

through the stable invariant subspace of the Hamiltonian matrix.  The
optimal feedback is ``U = -K Y`` with ``K = R^-1 Bt' P``.  In descriptor
form this is ``U = -R^-1 B' Pd M Y`` with ``Pd = M^-1 P M^-1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .pdesim import Mesh, assemble_fem
from .problem import HeatControlProblem


class RiccatiError(RuntimeError):
    """No stabilizing solution could be computed."""


@dataclass
class LqrSolution:
    P: np.ndarray
    K: np.ndarray  # gain row, U = -K @ Y
    Q: np.ndarray
    R: float
    residual: float  # relative Frobenius residual of the ARE
    spectral_abscissa: float  # of At - Bt K
    M: np.ndarray | None = None

    @property
    def P_descriptor(self) -> np.ndarray:
        if self.M is None:
            return self.P
        Mi = la.inv(self.M)
        return Mi @ self.P @ Mi


def _dense(X) -> np.ndarray:
    return X.toarray() if sp.issparse(X) else np.atleast_2d(np.asarray(X, dtype=float))


def _residual(At, S, Q, P):
    return At.T @ P + P @ At - P @ S @ P + Q


def _refine(At, S, Q, P, steps: int = 4):
    """Newton steps on the Riccati residual; the Schur solution is only
    accurate to the conditioning of the stiff FEM operator."""
    qn = max(np.linalg.norm(Q), 1e-300)
    best, best_res = P, np.linalg.norm(_residual(At, S, Q, P))
    for _ in range(steps):
        if best_res <= 1e-13 * qn:
            break
        Ac = At - S @ best
        X = la.solve_continuous_lyapunov(Ac.T, -_residual(At, S, Q, best))
        cand = best + (X + X.T) / 2
        cand = (cand + cand.T) / 2
        r = np.linalg.norm(_residual(At, S, Q, cand))
        if not r < best_res:
            break
        best, best_res = cand, r
    return best


def solve_are(M, A, B, Q, R: float) -> LqrSolution:
    """Stabilizing solution of the ARE of ``(M^-1 A, M^-1 B)`` with weights ``Q``, ``R``."""
    M, A, Q = _dense(M), _dense(A), _dense(Q)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    if not R > 0:
        raise ValueError("R must be positive")
    n = A.shape[0]
    At = la.solve(M, A)
    Bt = la.solve(M, B)
    S = Bt @ Bt.T / R
    ev = la.eigvals(At)
    if not np.any(Q) and ev.real.max() <= 0:
        # nothing to penalise and nothing to stabilise: zero feedback is optimal
        P = np.zeros((n, n))
    else:
        H = np.block([[At, -S], [-Q, -At.T]])
        T, Z, sdim = la.schur(H, output="real", sort="lhp")
        if sdim != n:
            raise RiccatiError(f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
        U11, U21 = Z[:n, :n], Z[n:, :n]
        try:
            P = la.solve(U11.T, U21.T).T
        except la.LinAlgError as exc:
            raise RiccatiError("stable subspace is not a graph over the state space") from exc
        P = (P + P.T) / 2
        P = _refine(At, S, Q, P)
    if la.eigvalsh(P)[0] < -1e-8 * max(1.0, np.abs(P).max()):
        raise RiccatiError("computed Riccati solution is indefinite")
    K = Bt.T @ P / R
    res = _residual(At, S, Q, P)
    qn = np.linalg.norm(Q)
    residual = float(np.linalg.norm(res) / (qn if qn > 0 else 1.0))
    abscissa = float(la.eigvals(At - Bt @ K).real.max())
    return LqrSolution(P, K.ravel() if K.shape[0] == 1 else K, Q, float(R), residual, abscissa, M)


def solve_problem(problem: HeatControlProblem, mesh: Mesh) -> LqrSolution:
    """LQR of the linearised (eta = 0) semi-discrete system with Q = M."""
    M, A, B = assemble_fem(problem, mesh)
    return solve_are(M, A, B, M, problem.R)


@dataclass
class LqrController:
    K: np.ndarray

    def __call__(self, t: float, x: np.ndarray, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        if y.size != self.K.size + 2:
            raise ValueError(f"gain has {self.K.size} entries, profile has {y.size - 2} interior nodes")
        return float(-self.K @ y[1:-1])

    def to_dict(self) -> dict:
        return {"format": "heatsos-lqr", "form": "lqr", "K": [float(k) for k in self.K]}


def lqr_controller(solution: LqrSolution) -> LqrController:
    return LqrController(np.asarray(solution.K, dtype=float).ravel())


def lqr_to_dict(solution: LqrSolution, mesh: Mesh | None = None) -> dict:
    doc = lqr_controller(solution).to_dict()
    doc.update({
        "R": solution.R,
        "residual": solution.residual,
        "spectral_abscissa": solution.spectral_abscissa,
        "P": solution.P.tolist(),
    })
    if mesh is not None:
        doc["h"] = mesh.h
    return doc


def lqr_from_dict(doc: dict) -> LqrController:
    if doc.get("format") != "heatsos-lqr":
        raise ValueError("not an LQR gain document")
    return LqrController(np.array(doc["K"], dtype=float))


def save_lqr(solution: LqrSolution, path: str | Path, mesh: Mesh | None = None) -> None:
    Path(path).write_text(json.dumps(lqr_to_dict(solution, mesh)) + "\n")
