"""Polynomial feedback laws recovered from pseudo-moments.

A controller has the integral form ``u(t) = int_0^1 gamma(t, x, y(t, x)) dx``.
Testing it against ``t^k`` for ``k = 0..p`` gives the rectangular system
``Phi = B c`` with

    Phi_k = moment of t^k u        under mu_E
    B_k   = moments of t^k * basis under mu

Three kernel shapes are supported:

    general(m)            gamma = beta_m(t, x, y) . c
    linear(m)             gamma = y * beta_m(t, x) . c
    semilinear(m, r, mr)  gamma = y * beta_m(t, x) . c + y^r * beta_mr(t, x) . c_delta
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la

from .polybasis import basis_size, monomial_list
from .sdpsolver import PseudoMoments

FORMS = ("general", "linear", "semilinear")
RCOND = 1e-10


class DegreeBudgetError(ValueError):
    """The requested controller needs moments beyond the relaxation degree."""


@dataclass(frozen=True)
class ControllerSpec:
    form: str
    m: int
    p: int
    r: int | None = None
    m_r: int | None = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown controller form {self.form!r}; expected one of {FORMS}")
        if self.m < 0 or self.p < 0:
            raise ValueError("m and p must be nonnegative")
        if self.form == "semilinear":
            if self.r is None or self.m_r is None:
                raise ValueError("semilinear form needs r and m_r")
            if self.r < 2:
                raise ValueError(f"semilinear form needs r >= 2, got r={self.r}")
            if self.m_r < 0:
                raise ValueError("m_r must be nonnegative")

    def check_budget(self, d: int) -> None:
        """Raise DegreeBudgetError naming the first violated inequality."""
        m, p = self.m, self.p
        if self.form == "general":
            bound = min(d - 1, d - m)
            if p > bound:
                raise DegreeBudgetError(f"p <= min(d-1, d-m) violated: p={p}, d={d}, m={m} (bound {bound})")
        else:
            if p > d - m - 1:
                raise DegreeBudgetError(f"p <= d-m-1 violated: p={p}, d={d}, m={m} (bound {d - m - 1})")
            if self.form == "semilinear" and p > d - self.m_r - self.r:
                raise DegreeBudgetError(
                    f"p <= d-m_r-r violated: p={p}, d={d}, m_r={self.m_r}, r={self.r} "
                    f"(bound {d - self.m_r - self.r})")

    def columns(self) -> list:
        """Exponents (a, b, c) of t^a x^b y^c for each unknown coefficient."""
        if self.form == "general":
            return list(monomial_list(3, self.m))
        cols = [(a, b, 1) for a, b in monomial_list(2, self.m)]
        if self.form == "semilinear":
            cols += [(a, b, self.r) for a, b in monomial_list(2, self.m_r)]
        return cols

    @property
    def n_coeff(self) -> int:
        if self.form == "general":
            return basis_size(3, self.m)
        n = basis_size(2, self.m)
        if self.form == "semilinear":
            n += basis_size(2, self.m_r)
        return n


@dataclass
class Controller:
    spec: ControllerSpec
    coeffs: np.ndarray  # c_gamma against the graded-lex basis
    coeffs_delta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: float = 0.0
    mode: str = "least-squares"  # or "minimum-norm"
    rank: int = 0
    u_box: tuple | None = None

    @property
    def form(self) -> str:
        return self.spec.form

    def kernel(self, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """gamma(t, x, y) evaluated pointwise."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(x)
        if self.form == "general":
            for (a, b, c), coef in zip(monomial_list(3, self.spec.m), self.coeffs):
                out += coef * t**a * x**b * y**c
            return out
        for (a, b), coef in zip(monomial_list(2, self.spec.m), self.coeffs):
            out += coef * t**a * x**b
        out = out * y
        if self.form == "semilinear":
            delta = np.zeros_like(x)
            for (a, b), coef in zip(monomial_list(2, self.spec.m_r), self.coeffs_delta):
                delta += coef * t**a * x**b
            out = out + delta * y**self.spec.r
        return out

    def __call__(self, t: float, x: np.ndarray, y: np.ndarray) -> float:
        return evaluate_control(self, t, x, y)

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "format": "heatsos-controller",
            "form": s.form,
            "m": s.m,
            "p": s.p,
            "r": s.r,
            "m_r": s.m_r,
            "coeffs": [float(c) for c in self.coeffs],
            "coeffs_delta": [float(c) for c in self.coeffs_delta],
            "basis": [list(a) for a in (monomial_list(3, s.m) if s.form == "general" else monomial_list(2, s.m))],
            "residual": self.residual,
            "mode": self.mode,
            "rank": self.rank,
            "u_box": list(self.u_box) if self.u_box is not None else None,
        }


def build_system(pm: PseudoMoments, spec: ControllerSpec) -> tuple[np.ndarray, np.ndarray]:
    spec.check_budget(pm.d)
    cols = spec.columns()
    Phi = np.empty(spec.p + 1)
    B = np.empty((spec.p + 1, len(cols)))
    for k in range(spec.p + 1):
        Phi[k] = pm.moment_of("mu_E", {"t": k, "u": 1})
        for j, (a, b, c) in enumerate(cols):
            B[k, j] = pm.moment_of("mu", {"t": k + a, "x": b, "y": c})
    return Phi, B


def solve_coeffs(Phi: np.ndarray, B: np.ndarray, spec: ControllerSpec | None = None,
                 u_box: tuple | None = None) -> Controller:
    """Least squares when overdetermined, minimum norm otherwise.

    An all-zero ``B`` (e.g. moments of the zero trajectory) yields zero
    coefficients with rank 0.
    """
    Phi = np.asarray(Phi, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    rows, n = B.shape
    mode = "least-squares" if rows > n else "minimum-norm"
    if np.any(B):
        c, _, rank, _ = la.lstsq(B, Phi, cond=RCOND)
    else:
        c, rank = np.zeros(n), 0
    residual = float(np.linalg.norm(B @ c - Phi))
    if spec is None:
        spec = ControllerSpec("general", 0, rows - 1)
    if spec.form == "semilinear":
        k = basis_size(2, spec.m)
        return Controller(spec, c[:k], c[k:], residual, mode, int(rank), u_box)
    return Controller(spec, c, np.zeros(0), residual, mode, int(rank), u_box)


def extract(pm: PseudoMoments, spec: ControllerSpec) -> Controller:
    Phi, B = build_system(pm, spec)
    u_box = tuple(pm.config["u_box"]) if "u_box" in pm.config else None
    return solve_coeffs(Phi, B, spec, u_box)


def evaluate_control(controller: Controller, t: float, x: np.ndarray, y: np.ndarray) -> float:
    """Trapezoid quadrature of the kernel on the nodes ``x``, clamped to the control box."""
    x = np.asarray(x, dtype=float)
    u = float(np.trapezoid(controller.kernel(t, x, y), x))
    if controller.u_box is not None:
        u = min(max(u, controller.u_box[0]), controller.u_box[1])
    return u


def controller_from_dict(doc: dict) -> Controller:
    if doc.get("format") != "heatsos-controller":
        raise ValueError("not a controller document")
    spec = ControllerSpec(doc["form"], int(doc["m"]), int(doc["p"]), doc.get("r"), doc.get("m_r"))
    u_box = tuple(doc["u_box"]) if doc.get("u_box") is not None else None
    return Controller(spec, np.array(doc["coeffs"], dtype=float),
                      np.array(doc.get("coeffs_delta", []), dtype=float),
                      float(doc.get("residual", 0.0)), doc.get("mode", "least-squares"),
                      int(doc.get("rank", 0)), u_box)


def save_controller(controller: Controller, path: str | Path) -> None:
    Path(path).write_text(json.dumps(controller.to_dict(), indent=2) + "\n")


def load_controller(path: str | Path):
    """Load a moment controller or an LQR gain file."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") == "heatsos-lqr":
        from .lqr import lqr_from_dict
        return lqr_from_dict(doc)
    return controller_from_dict(doc)
