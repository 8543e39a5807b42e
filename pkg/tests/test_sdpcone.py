import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatsos.polybasis import Polynomial, basis_size
from heatsos.problem import RelaxationConfig, default_paper_instance
from heatsos.sdpcone import (
    ConeError, build_cones, build_localizing_matrix, build_moment_matrix, support_polynomials,
)
from heatsos.weakform import MeasureLayout, assemble, support_sets
from oracles import graph_moments, manufactured_fields


def _line(d):
    """A single one-variable measure on t in [0, 1], unscaled."""
    return [MeasureLayout("nu", ("t",), {}, 0, d, (0.0,), (1.0,))]


def _lebesgue(d):
    return np.array([1 / (k + 1) for k in range(d + 1)])


def _dirac(p, d):
    return np.array([p**k for k in range(d + 1)], dtype=float)


def test_lebesgue_hankel():
    blk = build_moment_matrix(_line(2), "nu", 1)
    M = blk.instantiate(_lebesgue(2))
    assert np.allclose(M, [[1, 1 / 2], [1 / 2, 1 / 3]])
    assert np.linalg.eigvalsh(M).min() > 0


def test_dirac_moment_matrix_is_rank_one():
    blk = build_moment_matrix(_line(4), "nu", 2)
    v = np.array([1, 0.3, 0.09])
    M = blk.instantiate(_dirac(0.3, 4))
    assert np.allclose(M, np.outer(v, v))
    assert np.linalg.matrix_rank(M, tol=1e-12) == 1


def test_localizing_lebesgue():
    t = Polynomial.variable(1, 0)
    g = t * (1 - t)
    blk = build_localizing_matrix(_line(4), "nu", g, 1)
    L = blk.instantiate(_lebesgue(4))
    assert L[0, 0] == pytest.approx(1 / 6)
    for i in range(2):
        for j in range(2):
            k = i + j
            assert L[i, j] == pytest.approx(1 / (k + 2) - 1 / (k + 3))


def test_localizing_dirac_cases():
    t = Polynomial.variable(1, 0)
    g = t * (1 - t)
    blk = build_localizing_matrix(_line(4), "nu", g, 1)
    inside = blk.instantiate(_dirac(0.4, 4))
    v = np.array([1, 0.4])
    assert np.allclose(inside, 0.4 * 0.6 * np.outer(v, v))
    assert np.linalg.eigvalsh(inside).min() >= -1e-15
    assert np.allclose(blk.instantiate(_dirac(0.0, 4)), 0)


def test_order_too_large():
    with pytest.raises(ConeError):
        build_moment_matrix(_line(2), "nu", 2)
    t = Polynomial.variable(1, 0)
    with pytest.raises(ConeError):
        build_localizing_matrix(_line(2), "nu", t * (1 - t), 1)


def test_support_polynomial_counts():
    p = default_paper_instance()
    assert len(support_polynomials(p, "mu")) == 5
    assert len(support_polynomials(p, "mu_E")) == 5
    assert len(support_polynomials(p, "mu_I")) == 4
    t_box = support_polynomials(p, "mu")[0]
    assert float(t_box(0.5, 0, 0, 0, 0)) == pytest.approx(0.25)
    assert float(t_box(1.0, 0, 0, 0, 0)) == 0


def test_block_sizes_at_degree_six():
    prog = assemble(default_paper_instance(), RelaxationConfig(d=6))
    mom = [c for c in prog.cones if c.label == "mu:moment"][0]
    assert mom.size == 56 == basis_size(5, 3)
    for cone in prog.cones:
        lay = prog.measure(cone.measure)
        if cone.measure == "mu_W":
            continue
        k = 3 - (0 if cone.label.endswith("moment") else 1)
        assert cone.size == basis_size(lay.n, k)
        G = cone.G.toarray().reshape(cone.size, cone.size, -1)
        assert np.array_equal(G, G.transpose(1, 0, 2))


def test_pinned_west_blocks_drop_y():
    prog = assemble(default_paper_instance(), RelaxationConfig(d=6))
    west = [c for c in prog.cones if c.measure == "mu_W"]
    assert {c.label for c in west} == {"mu_W:moment", "mu_W:box_t", "mu_W:box_z1", "mu_W:box_z2"}
    assert west[0].size == basis_size(3, 3)


def test_quadrature_moments_give_psd_blocks():
    # moments of a genuine trajectory (inside the boxes) must pass every cone
    p = default_paper_instance()
    from dataclasses import replace

    p = replace(p, y0_coeffs=(0.0, 0.0))
    prog = assemble(p, RelaxationConfig(d=4))
    s = graph_moments(prog.layout, manufactured_fields())
    x = np.linalg.solve(prog.transform().toarray(), s)
    for cone in prog.cones:
        M = cone.instantiate(x)
        scale = max(1.0, np.abs(M).max())
        assert np.linalg.eigvalsh(M).min() >= -1e-8 * scale, cone.label


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5), st.lists(st.floats(-3, 3), min_size=5, max_size=5),
       st.floats(-2, 2), st.floats(-2, 2))
def test_instantiation_is_linear(s1, s2, a, b):
    blk = build_moment_matrix(_line(4), "nu", 2)
    s1, s2 = np.array(s1), np.array(s2)
    lhs = blk.instantiate(a * s1 + b * s2)
    rhs = a * blk.instantiate(s1) + b * blk.instantiate(s2)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_cones_cover_every_measure():
    prog = assemble(default_paper_instance(nonlinear=True), RelaxationConfig(d=4))
    cones = build_cones(prog)
    assert {c.measure for c in cones} == {lay.name for lay in support_sets(prog.problem, 4)}
