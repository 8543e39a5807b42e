"""Moment and localizing matrices of the truncated moment cones."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .polybasis import Polynomial, add_exponents, affine_substitute, monomial_list
from .problem import HeatControlProblem
from .weakform import SUPPORTS, MeasureLayout, _var_box


class ConeError(ValueError):
    """Requested block does not fit in the moment vector."""


@dataclass(frozen=True)
class PsdBlockDescriptor:
    """Linear map s -> symmetric matrix whose (i, j) entry is int b_i b_j g."""

    measure: str
    g: Polynomial
    order: int
    size: int
    G: sp.csr_matrix  # (size*size, n) row-major vec of the matrix
    label: str = ""

    def instantiate(self, s: np.ndarray) -> np.ndarray:
        return (self.G @ np.asarray(s, dtype=float)).reshape(self.size, self.size)


def support_polynomials(problem: HeatControlProblem, measure: str) -> list:
    """Box quadratics (v - lo)(hi - v) in the measure's own variables."""
    variables, _ = SUPPORTS[measure]
    n = len(variables)
    out = []
    for i, v in enumerate(variables):
        lo, hi = _var_box(problem, v)
        xi = Polynomial.variable(n, i)
        out.append((xi - lo) * (hi - xi))
    return out


def _layout_of(layout, measure: str) -> MeasureLayout:
    for lay in layout:
        if lay.name == measure:
            return lay
    raise KeyError(measure)


def _n_total(layout) -> int:
    return sum(lay.size for lay in layout)


def _block(lay: MeasureLayout, n_total: int, g: Polynomial, k: int, label: str,
           basis=None) -> PsdBlockDescriptor:
    if basis is None:
        basis = monomial_list(lay.n, k)
    size = len(basis)
    rows, cols, vals = [], [], []
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            r = i * size + j
            bij = add_exponents(bi, bj)
            for gamma, coef in g.items():
                rows.append(r)
                cols.append(lay.column(add_exponents(bij, gamma)))
                vals.append(float(coef))
    G = sp.csr_matrix((vals, (rows, cols)), shape=(size * size, n_total))
    G.sum_duplicates()
    G.eliminate_zeros()
    return PsdBlockDescriptor(lay.name, g, k, size, G, label)


def _basis(lay: MeasureLayout, k: int, absent: tuple = ()) -> list:
    drop = [lay.variables.index(v) for v in absent]
    return [a for a in monomial_list(lay.n, k) if not any(a[i] for i in drop)]


def build_moment_matrix(layout, measure: str, k: int, absent: tuple = ()) -> PsdBlockDescriptor:
    """Moment matrix of order ``k``; ``absent`` variables are left out of the basis."""
    lay = _layout_of(layout, measure)
    if 2 * k > lay.d:
        raise ConeError(f"moment matrix of order {k} needs degree {2 * k} > {lay.d}")
    g = Polynomial.constant(lay.n, 1)
    return _block(lay, _n_total(layout), g, k, f"{measure}:moment", _basis(lay, k, absent))


def build_localizing_matrix(layout, measure: str, g: Polynomial, k: int | None = None,
                            label: str = "", absent: tuple = ()) -> PsdBlockDescriptor:
    """Localizing matrix of ``g`` (already expressed in the layout's coordinates).

    With ``k=None`` the largest admissible order ``d//2 - ceil(deg g / 2)`` is used.
    """
    lay = _layout_of(layout, measure)
    if g.n != lay.n:
        raise ConeError(f"g has {g.n} variables, measure {measure} has {lay.n}")
    if k is None:
        k = lay.d // 2 - math.ceil(g.degree / 2)
    if k < 0 or g.degree + 2 * k > lay.d:
        raise ConeError(f"localizing block of order {k} for deg-{g.degree} g exceeds degree {lay.d}")
    return _block(lay, _n_total(layout), g, k, label or f"{measure}:localizing", _basis(lay, k, absent))


def scaled_support(lay: MeasureLayout, g: Polynomial) -> Polynomial:
    """Rewrite ``g`` in the layout's scaled variables, normalised to max |coef| = 1."""
    h = affine_substitute(g, lay.shift, lay.scale)
    top = max(abs(float(c)) for _, c in h.items())
    return Polynomial(h.n, {a: float(c) / top for a, c in h.items()})


def build_cones(program) -> list:
    """Moment matrix plus one localizing block per box quadratic, for each measure.

    With ``pin_west_trace`` the x=0 measure carries y = 0, so its blocks are
    built on the y-free basis and the y box is dropped.
    """
    cones = []
    k = program.d // 2
    for lay in program.layout:
        absent = ("y",) if lay.name == "mu_W" and program.config.pin_west_trace else ()
        cones.append(build_moment_matrix(program.layout, lay.name, k, absent))
        for v, g in zip(lay.variables, support_polynomials(program.problem, lay.name)):
            if v in absent:
                continue
            gs = scaled_support(lay, g)
            cones.append(build_localizing_matrix(program.layout, lay.name, gs,
                                                 label=f"{lay.name}:box_{v}", absent=absent))
    return cones
