"""Problem instance for boundary control of the 1D semilinear heat equation.

    y_t = lam * y_xx + alpha * y + eta * y^3   on (t, x) in [0,1]^2
    y(t, 0) = 0,  y(t, 1) = u(t),  y(0, x) = y0(x)

with cost 1/2 int y^2 + R/2 int u^2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .polybasis import Polynomial

DEFAULT_LAMBDA = 0.5
DEFAULT_R = 1e-3
# 10 x^2 (1 - x)^3, ascending powers of x
DEFAULT_Y0 = (0, 0, 10, -30, 30, -10)


class ConfigError(ValueError):
    """Invalid problem or relaxation configuration."""


def _box(values, name) -> tuple:
    lo, hi = (float(v) for v in values)
    if not hi > lo:
        raise ConfigError(f"{name} must have positive width, got [{lo}, {hi}]")
    if not lo <= 0 <= hi:
        raise ConfigError(f"{name} must contain 0, got [{lo}, {hi}]")
    return (lo, hi)


@dataclass(frozen=True)
class HeatControlProblem:
    lam: float = DEFAULT_LAMBDA
    alpha: float = 0.2 + DEFAULT_LAMBDA * math.pi**2
    eta: float = 0.0
    R: float = DEFAULT_R
    y0_coeffs: tuple = DEFAULT_Y0
    y_box: tuple = (-1.2, 1.2)
    z1_box: tuple = (-6.0, 6.0)
    z2_box: tuple = (-6.0, 6.0)
    u_box: tuple = (-1.2, 1.2)
    # ascending coefficients of a polynomial nonlinearity g(y) with g(0) = 0,
    # replacing eta * y^3 when given
    nonlinearity: tuple | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not self.R > 0:
            raise ConfigError(f"R must be positive, got {self.R}")
        if self.alpha < 0 or self.eta < 0:
            raise ConfigError("alpha and eta must be nonnegative")
        for name in ("y_box", "z1_box", "z2_box", "u_box"):
            object.__setattr__(self, name, _box(getattr(self, name), name))
        object.__setattr__(self, "y0_coeffs", tuple(self.y0_coeffs))
        if abs(float(self.y0_coeffs[0] if self.y0_coeffs else 0)) > 1e-12:
            raise ConfigError("y0(0) must vanish (Dirichlet condition at x=0)")
        if abs(float(sum(self.y0_coeffs))) > 1e-12:
            raise ConfigError("y0(1) must vanish (compatibility with u at t=0)")
        if self.nonlinearity is not None:
            coeffs = tuple(self.nonlinearity)
            if coeffs and coeffs[0] != 0:
                raise ConfigError("nonlinearity must vanish at y=0")
            object.__setattr__(self, "nonlinearity", coeffs)

    @property
    def y0(self) -> Polynomial:
        return Polynomial.univariate(self.y0_coeffs or (0,))

    def reaction(self) -> Polynomial:
        """f(y) = alpha*y + nonlinear part, as a univariate polynomial."""
        f = Polynomial.univariate([0, self.alpha])
        if self.nonlinearity is None:
            f = f + Polynomial.univariate([0, 0, 0, self.eta])
        else:
            f = f + Polynomial.univariate(self.nonlinearity)
        return f

    def nonlinear_part(self) -> Polynomial:
        return self.reaction() - Polynomial.univariate([0, self.alpha])

    @property
    def is_linear(self) -> bool:
        return self.nonlinear_part().is_zero()

    def boxes(self) -> dict:
        return {"y": self.y_box, "z1": self.z1_box, "z2": self.z2_box, "u": self.u_box}

    def with_eta(self, eta: float) -> "HeatControlProblem":
        return replace(self, eta=eta)


@dataclass(frozen=True)
class RelaxationConfig:
    d: int = 6
    # "per_row": drop a test monomial only if one of its integrands exceeds d;
    # "exempt_known": as per_row, but the pure-x part of phi*y0 on mu_I is
    # moved to b before the check (its moments are exact at any degree);
    # "uniform": cap each equation's test degree by its worst-case degree raise
    test_degree_policy: str = "exempt_known"
    marginal_rows: bool = True
    scale_variables: bool = True
    # the weak form forces y = 0 on the x=0 face; pinning it removes a
    # PSD face with no interior
    pin_west_trace: bool = True

    def __post_init__(self):
        if self.d % 2:
            raise ConfigError(f"relaxation degree must be even, got {self.d}")
        if self.d < 4:
            raise ConfigError(f"relaxation degree must be >= 4, got {self.d}")
        if self.test_degree_policy not in ("per_row", "exempt_known", "uniform"):
            raise ConfigError(f"unknown test_degree_policy {self.test_degree_policy!r}")

    @property
    def k(self) -> int:
        return self.d // 2


def eigenvalue(problem: HeatControlProblem, k: int) -> float:
    """Dirichlet eigenvalue alpha - lam*pi^2*k^2 of the linearised operator."""
    if k < 1:
        raise ValueError("mode index starts at 1")
    return problem.alpha - problem.lam * math.pi**2 * k**2


def count_unstable_modes(problem: HeatControlProblem) -> int:
    """Number of modes k >= 1 with a strictly positive eigenvalue."""
    k = 0
    while eigenvalue(problem, k + 1) > 0:
        k += 1
    return k


def default_paper_instance(nonlinear: bool = False) -> HeatControlProblem:
    """Parameters of the reported experiments; ``eta = 13*alpha`` if nonlinear."""
    alpha = 0.2 + DEFAULT_LAMBDA * math.pi**2
    return HeatControlProblem(eta=13 * alpha if nonlinear else 0.0, alpha=alpha)


# configuration file: JSON with the documented keys

def load_config(path: str | Path) -> tuple[HeatControlProblem, RelaxationConfig]:
    raw = json.loads(Path(path).read_text())
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> tuple[HeatControlProblem, RelaxationConfig]:
    known = {"lambda", "alpha", "eta", "R", "y0_coeffs", "y_box", "z_box", "z1_box",
             "z2_box", "u_box", "relaxation_degree", "nonlinearity",
             "test_degree_policy", "marginal_rows", "scale_variables", "pin_west_trace"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = HeatControlProblem()
    kw = {}
    if "lambda" in raw:
        kw["lam"] = float(raw["lambda"])
    for key in ("alpha", "eta", "R"):
        if key in raw:
            kw[key] = float(raw[key])
    if "y0_coeffs" in raw:
        kw["y0_coeffs"] = tuple(float(c) for c in raw["y0_coeffs"])
    if "y_box" in raw:
        kw["y_box"] = tuple(raw["y_box"])
    if "z_box" in raw:
        z = raw["z_box"]
        # either one interval for both gradient components or a pair of intervals
        if len(z) == 2 and all(isinstance(v, (int, float)) for v in z):
            kw["z1_box"] = kw["z2_box"] = tuple(z)
        else:
            kw["z1_box"], kw["z2_box"] = tuple(z[0]), tuple(z[1])
    for key in ("z1_box", "z2_box", "u_box"):
        if key in raw:
            kw[key] = tuple(raw[key])
    if raw.get("nonlinearity") is not None:
        kw["nonlinearity"] = tuple(float(c) for c in raw["nonlinearity"])
    problem = replace(base, **kw)
    rkw = {}
    if "relaxation_degree" in raw:
        d = raw["relaxation_degree"]
        if int(d) != d:
            raise ConfigError(f"relaxation degree must be an integer, got {d}")
        rkw["d"] = int(d)
    for key in ("test_degree_policy", "marginal_rows", "scale_variables", "pin_west_trace"):
        if key in raw:
            rkw[key] = raw[key]
    return problem, RelaxationConfig(**rkw)


def config_to_dict(problem: HeatControlProblem, config: RelaxationConfig | None = None) -> dict:
    out = {
        "lambda": problem.lam,
        "alpha": problem.alpha,
        "eta": problem.eta,
        "R": problem.R,
        "y0_coeffs": [float(c) for c in problem.y0_coeffs],
        "y_box": list(problem.y_box),
        "z_box": [list(problem.z1_box), list(problem.z2_box)],
        "u_box": list(problem.u_box),
    }
    if problem.nonlinearity is not None:
        out["nonlinearity"] = list(problem.nonlinearity)
    if config is not None:
        out["relaxation_degree"] = config.d
        out["test_degree_policy"] = config.test_degree_policy
        out["marginal_rows"] = config.marginal_rows
        out["scale_variables"] = config.scale_variables
        out["pin_west_trace"] = config.pin_west_trace
    return out


def save_config(path: str | Path, problem: HeatControlProblem, config: RelaxationConfig | None = None) -> None:
    Path(path).write_text(json.dumps(config_to_dict(problem, config), indent=2) + "\n")
