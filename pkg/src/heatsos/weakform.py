"""Truncated linear constraints of the occupation-measure relaxation.

Five measures live on the faces of the space-time square:

    mu    on (t, x, y, z1, z2)       interior
    mu_I  on (x, y, z1, z2)          t = 0
    mu_F  on (x, y, z1, z2)          t = 1
    mu_W  on (t, y, z1, z2)          x = 0
    mu_E  on (t, y, z1, z2, u)       x = 1 (control boundary)

Every integrand is first written as a polynomial in the full variable list
``(t, x, y, z1, z2, u)`` and then restricted to the face of its measure.
Rows are stored against the *original* monomial moments; the solver works on
affinely rescaled moments related by ``s = T s_scaled``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .polybasis import Polynomial, box_moment, monomial_index, monomial_list
from .problem import HeatControlProblem, RelaxationConfig

FULL_VARS = ("t", "x", "y", "z1", "z2", "u")
T, X, Y, Z1, Z2, U = range(6)
NFULL = len(FULL_VARS)

# name -> (free variables, fixed variable substitutions)
SUPPORTS = {
    "mu": (("t", "x", "y", "z1", "z2"), {}),
    "mu_I": (("x", "y", "z1", "z2"), {"t": 0}),
    "mu_F": (("x", "y", "z1", "z2"), {"t": 1}),
    "mu_W": (("t", "y", "z1", "z2"), {"x": 0}),
    "mu_E": (("t", "y", "z1", "z2", "u"), {"x": 1}),
}
MEASURES = tuple(SUPPORTS)
EQUATIONS = ("stokes_t", "stokes_x", "pde", "boundary")


class AssemblyError(ValueError):
    """The relaxation cannot be assembled for the requested degree."""


def _var_box(problem: HeatControlProblem, name: str) -> tuple:
    if name in ("t", "x"):
        return (0.0, 1.0)
    return getattr(problem, f"{name}_box")


@dataclass(frozen=True)
class MeasureLayout:
    """Slice of the moment vector belonging to one measure."""

    name: str
    variables: tuple
    fixed: dict
    offset: int
    d: int
    shift: tuple  # original = shift + scale * scaled, per free variable
    scale: tuple

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def monomials(self) -> tuple:
        return monomial_list(self.n, self.d)

    @property
    def size(self) -> int:
        return len(self.monomials)

    @property
    def positions(self) -> tuple:
        return tuple(FULL_VARS.index(v) for v in self.variables)

    def column(self, alpha) -> int:
        return self.offset + monomial_index(self.n, self.d)[tuple(alpha)]

    def restrict(self, p: Polynomial) -> Polynomial:
        """Substitute the face values into a full-variable polynomial."""
        for var, value in self.fixed.items():
            p = p.substitute(FULL_VARS.index(var), value)
        return p.select(self.positions)

    def transform(self) -> np.ndarray:
        """Matrix T with original moments = T @ scaled moments."""
        mons = self.monomials
        index = monomial_index(self.n, self.d)
        out = np.zeros((len(mons), len(mons)))
        for i, alpha in enumerate(mons):
            # expand prod (c_k + s_k w_k)^a_k
            factors = []
            for a, c, s in zip(alpha, self.shift, self.scale):
                factors.append([(b, math.comb(a, b) * s**b * c ** (a - b)) for b in range(a + 1)])
            for combo in _product(factors):
                beta = tuple(b for b, _ in combo)
                coef = 1.0
                for _, w in combo:
                    coef *= w
                if coef:
                    out[i, index[beta]] += coef
        return out


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def support_sets(problem: HeatControlProblem, d: int, scaled: bool = True) -> list:
    layouts = []
    offset = 0
    for name, (variables, fixed) in SUPPORTS.items():
        shift, scale = [], []
        for v in variables:
            lo, hi = _var_box(problem, v)
            if scaled:
                shift.append((lo + hi) / 2)
                scale.append((hi - lo) / 2)
            else:
                shift.append(0.0)
                scale.append(1.0)
        lay = MeasureLayout(name, variables, dict(fixed), offset, d, tuple(shift), tuple(scale))
        layouts.append(lay)
        offset += lay.size
    return layouts


@dataclass
class RelaxationProgram:
    """Truncated relaxation: min c.s s.t. A s = b, s in the moment cones.

    ``A``, ``b``, ``c`` act on original monomial moments ``s``; ``cones``
    (filled by :mod:`heatsos.sdpcone`) act on scaled moments.
    """

    problem: HeatControlProblem
    config: RelaxationConfig
    layout: list
    A: sp.csr_matrix
    b: np.ndarray
    row_labels: list
    c: np.ndarray | None = None
    cones: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return sum(lay.size for lay in self.layout)

    @property
    def d(self) -> int:
        return self.config.d

    def measure(self, name: str) -> MeasureLayout:
        for lay in self.layout:
            if lay.name == name:
                return lay
        raise KeyError(name)

    def transform(self) -> sp.csr_matrix:
        return sp.block_diag([sp.csr_matrix(lay.transform()) for lay in self.layout], format="csr")

    def split(self, s: np.ndarray) -> dict:
        return {lay.name: np.asarray(s[lay.offset:lay.offset + lay.size]) for lay in self.layout}


def _full(alpha_txy) -> Polynomial:
    a, b, c = alpha_txy
    return Polynomial.monomial((a, b, c, 0, 0, 0), 1)


def _var(i: int) -> Polynomial:
    return Polynomial.variable(NFULL, i)


def _lift_univariate(p: Polynomial, var: int) -> Polynomial:
    return p.embed(NFULL, (var,))


def weak_form_integrands(problem: HeatControlProblem, equation: str, phi: Polynomial) -> dict:
    """Integrands per measure of one weak-form identity for test function ``phi``."""
    dt, dx, dy = phi.diff(T), phi.diff(X), phi.diff(Y)
    z1, z2, y, u = _var(Z1), _var(Z2), _var(Y), _var(U)
    lam = problem.lam
    if equation == "stokes_t":
        return {"mu": dt + z1 * dy, "mu_I": phi, "mu_F": -phi}
    if equation == "stokes_x":
        return {"mu": dx + z2 * dy, "mu_W": phi, "mu_E": -phi}
    if equation == "pde":
        f = _lift_univariate(problem.reaction(), Y)
        return {
            "mu": phi * (z1 - f) + (dx + z2 * dy) * z2 * lam,
            "mu_W": phi * z2 * lam,
            "mu_E": -(phi * z2 * lam),
        }
    if equation == "boundary":
        y0 = _lift_univariate(problem.y0, X)
        return {"mu_I": phi * (y - y0), "mu_E": phi * (y - u), "mu_W": phi * y}
    raise ValueError(f"unknown equation {equation!r}")


def _degree_raise(problem: HeatControlProblem, equation: str) -> int:
    if equation in ("stokes_t", "stokes_x"):
        return 0
    if equation == "pde":
        return max(problem.reaction().degree, 1)
    return max(problem.y0.degree, 1)


def _columns(lay: MeasureLayout, poly: Polynomial):
    cols, vals = [], []
    for alpha, coef in poly.items():
        cols.append(lay.column(alpha))
        vals.append(coef)
    return cols, vals


def _split_known(lay: MeasureLayout, poly: Polynomial, surviving: str):
    """Separate terms depending only on the face variable (fixed by marginals)."""
    k = lay.variables.index(surviving)
    known, rest = 0, {}
    for alpha, coef in poly.items():
        if all(e == 0 for i, e in enumerate(alpha) if i != k):
            known += coef * box_moment((alpha[k],))
        else:
            rest[alpha] = coef
    return known, Polynomial(lay.n, rest)


def assemble_constraints(problem: HeatControlProblem, config: RelaxationConfig) -> RelaxationProgram:
    d = config.d
    layout = support_sets(problem, d, scaled=config.scale_variables)
    by_name = {lay.name: lay for lay in layout}
    rows, cols, vals, rhs, labels = [], [], [], [], []

    def add_row(entries: dict, b_value, label):
        r = len(rhs)
        for name, poly in entries.items():
            c, v = _columns(by_name[name], poly)
            rows.extend([r] * len(c))
            cols.extend(c)
            vals.extend(v)
        rhs.append(b_value)
        labels.append(label)

    tests = monomial_list(3, d)
    policy = config.test_degree_policy
    for equation in EQUATIONS:
        raise_ = _degree_raise(problem, equation)
        admitted = 0
        for alpha in tests:
            if policy == "uniform" and sum(alpha) + raise_ > d:
                continue
            restricted = {}
            too_high = False
            b_value = 0
            for name, integrand in weak_form_integrands(problem, equation, _full(alpha)).items():
                p = by_name[name].restrict(integrand)
                if equation == "boundary" and name == "mu_I" and policy != "uniform":
                    # phi*y0 against mu_I reduces to x-moments pinned by the
                    # Lebesgue marginal; exact at any degree
                    known, rest = _split_known(by_name["mu_I"], p, "x")
                    if policy == "exempt_known":
                        p, b_value = rest, -known
                if p.is_zero():
                    continue
                if p.degree > d:
                    too_high = True
                    break
                restricted[name] = p
            if too_high or not restricted:
                continue
            admitted += 1
            if equation == "boundary" and "mu_I" in restricted and policy != "exempt_known":
                known, restricted["mu_I"] = _split_known(by_name["mu_I"], restricted["mu_I"], "x")
                b_value = -known
            add_row(restricted, b_value, (equation, alpha))
        if admitted == 0:
            raise AssemblyError(
                f"relaxation degree {d} admits no test function for the {equation!r} equation"
            )

    # marginals of the boundary measures against the unit-length face measure
    for name, surviving in (("mu_I", "x"), ("mu_F", "x"), ("mu_W", "t"), ("mu_E", "t")):
        lay = by_name[name]
        k = lay.variables.index(surviving)
        for a in range(d + 1):
            alpha = [0] * lay.n
            alpha[k] = a
            add_row({name: Polynomial.monomial(tuple(alpha))}, box_moment((a,)), ("marginal", name, (a,)))
    if config.marginal_rows:
        lay = by_name["mu"]
        for alpha in monomial_list(2, d):
            mono = (alpha[0], alpha[1], 0, 0, 0)
            add_row({"mu": Polynomial.monomial(mono)}, box_moment(alpha), ("marginal", "mu", alpha))

    if config.pin_west_trace:
        lay = by_name["mu_W"]
        k = lay.variables.index("y")
        for alpha in lay.monomials:
            if alpha[k]:
                add_row({"mu_W": Polynomial.monomial(alpha)}, 0, ("dirichlet_W", alpha))

    n = sum(lay.size for lay in layout)
    A = sp.csr_matrix(
        (np.array([float(v) for v in vals]), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(len(rhs), n),
    )
    A.sum_duplicates()
    A.eliminate_zeros()
    b = np.array([float(v) for v in rhs])
    return RelaxationProgram(problem, config, layout, A, b, labels)


def assemble_cost(problem: HeatControlProblem, config: RelaxationConfig, program: RelaxationProgram) -> RelaxationProgram:
    c = np.zeros(program.n)
    mu = program.measure("mu")
    c[mu.column((0, 0, 2, 0, 0))] = 0.5
    mu_e = program.measure("mu_E")
    c[mu_e.column((0, 0, 0, 0, 2))] = problem.R / 2
    program.c = c
    return program


def assemble(problem: HeatControlProblem, config: RelaxationConfig) -> RelaxationProgram:
    """Constraints, cost and PSD cones in one go."""
    from .sdpcone import build_cones

    program = assemble_constraints(problem, config)
    assemble_cost(problem, config, program)
    program.cones = build_cones(program)
    return program


def dump_program(program: RelaxationProgram, path: str | Path) -> None:
    """Write (A, b, c, layout) as sparse text.

    Lines starting with ``#`` form the layout header::

        # measure <name> offset <k> size <n> vars <v1,v2,..> fixed <var=val,..|->
        # rows <m> cols <n>

    followed by ``A <row> <col> <value>``, ``b <row> <value>`` and
    ``c <col> <value>`` records (zero-based indices, nonzeros only).
    """
    lines = [f"# heatsos relaxation d={program.d}"]
    for lay in program.layout:
        fixed = ",".join(f"{k}={v}" for k, v in lay.fixed.items()) or "-"
        lines.append(
            f"# measure {lay.name} offset {lay.offset} size {lay.size} vars {','.join(lay.variables)} fixed {fixed}"
        )
    lines.append(f"# rows {program.A.shape[0]} cols {program.A.shape[1]}")
    coo = program.A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for r, col, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        lines.append(f"A {r} {col} {float(v)!r}")
    for r, v in enumerate(program.b):
        if v != 0:
            lines.append(f"b {r} {float(v)!r}")
    if program.c is not None:
        for col in np.flatnonzero(program.c):
            lines.append(f"c {col} {float(program.c[col])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_program_dump(path: str | Path) -> dict:
    """Parse :func:`dump_program` output into plain arrays (for inspection/tests)."""
    measures, entries, b_entries, c_entries = [], [], {}, {}
    shape = None
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "#":
            if len(parts) > 1 and parts[1] == "measure":
                measures.append({"name": parts[2], "offset": int(parts[4]), "size": int(parts[6]),
                                 "vars": tuple(parts[8].split(","))})
            elif len(parts) > 1 and parts[1] == "rows":
                shape = (int(parts[2]), int(parts[4]))
        elif parts[0] == "A":
            entries.append((int(parts[1]), int(parts[2]), float(parts[3])))
        elif parts[0] == "b":
            b_entries[int(parts[1])] = float(parts[2])
        elif parts[0] == "c":
            c_entries[int(parts[1])] = float(parts[2])
    r, cidx, v = zip(*entries) if entries else ((), (), ())
    A = sp.csr_matrix((v, (r, cidx)), shape=shape)
    b = np.zeros(shape[0])
    for k, val in b_entries.items():
        b[k] = val
    c = np.zeros(shape[1])
    for k, val in c_entries.items():
        c[k] = val
    return {"A": A, "b": b, "c": c, "measures": measures}


__all__ = [
    "AssemblyError", "FULL_VARS", "MEASURES", "MeasureLayout", "RelaxationProgram",
    "assemble", "assemble_constraints", "assemble_cost", "dump_program",
    "load_program_dump", "support_sets", "weak_form_integrands"
]
