from dataclasses import replace

import numpy as np
import pytest

from heatsos.problem import HeatControlProblem, RelaxationConfig, default_paper_instance
from heatsos.weakform import (
    AssemblyError, SUPPORTS, assemble, assemble_constraints, dump_program,
    load_program_dump, support_sets,
)
from oracles import graph_moments, manufactured_fields, zero_fields

ZERO_Y0 = (0.0, 0.0)


def _zero_data_problem(**kw):
    return replace(default_paper_instance(), y0_coeffs=ZERO_Y0, **kw)


def test_support_sets_shape():
    lays = support_sets(default_paper_instance(), 4)
    assert [lay.n for lay in lays] == [5, 4, 4, 4, 5]
    for lay in lays:
        assert set(lay.variables) | set(lay.fixed) >= {"t", "x"}
        for var, value in lay.fixed.items():
            assert value in (0, 1)
    assert SUPPORTS["mu_E"][1] == {"x": 1}


@pytest.mark.parametrize("nonlinear", [False, True])
def test_zero_certificate(nonlinear):
    p = _zero_data_problem(eta=13.0 if nonlinear else 0.0)
    prog = assemble_constraints(p, RelaxationConfig(d=4))
    s = graph_moments(prog.layout, zero_fields())
    assert np.abs(prog.A @ s - prog.b).max() < 1e-10


def test_marginal_t_squared_on_east_face():
    prog = assemble_constraints(default_paper_instance(), RelaxationConfig(d=4))
    r = prog.row_labels.index(("marginal", "mu_E", (2,)))
    assert prog.b[r] == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("d", [4, 6])
def test_manufactured_stokes_rows_vanish(d):
    p = _zero_data_problem()
    prog = assemble_constraints(p, RelaxationConfig(d=d, scale_variables=False))
    s = graph_moments(prog.layout, manufactured_fields())
    res = prog.A @ s - prog.b
    checked = 0
    for label, r in zip(prog.row_labels, res):
        if label[0] == "pde":
            continue
        assert abs(r) < 1e-8, label
        checked += 1
    assert checked > 100
    # this y does not solve the PDE, so some pde rows must be violated
    pde = [abs(r) for label, r in zip(prog.row_labels, res) if label[0] == "pde"]
    assert max(pde) > 1e-3


def test_manufactured_cost():
    p = _zero_data_problem()
    prog = assemble(p, RelaxationConfig(d=4))
    assert np.count_nonzero(prog.c) == 2
    s = graph_moments(prog.layout, manufactured_fields())
    assert prog.c @ s == pytest.approx(1 / 180, rel=1e-12)
    assert prog.c @ graph_moments(prog.layout, zero_fields()) == 0


def test_assembly_is_deterministic():
    p = default_paper_instance(nonlinear=True)
    a = assemble_constraints(p, RelaxationConfig(d=6))
    b = assemble_constraints(p, RelaxationConfig(d=6))
    assert a.row_labels == b.row_labels
    assert (a.A != b.A).nnz == 0
    assert np.array_equal(a.b, b.b)


def test_row_count_depends_only_on_degrees():
    base = default_paper_instance()
    other = replace(base, lam=2.0, alpha=0.3, R=0.5, y0_coeffs=(0, 1, 0, 0, 0, -1))
    n1 = assemble_constraints(base, RelaxationConfig(d=4)).A.shape[0]
    n2 = assemble_constraints(other, RelaxationConfig(d=4)).A.shape[0]
    # same y0 degree (5), both reactions linear
    assert n1 == n2


def test_rows_touch_at_most_three_measures():
    prog = assemble_constraints(default_paper_instance(nonlinear=True), RelaxationConfig(d=4))
    owner = np.empty(prog.n, dtype=int)
    for k, lay in enumerate(prog.layout):
        owner[lay.offset:lay.offset + lay.size] = k
    A = prog.A.tocsr()
    for r in range(A.shape[0]):
        cols = A.indices[A.indptr[r]:A.indptr[r + 1]]
        assert len(set(owner[cols])) <= 3


def test_rhs_only_on_marginals_and_initial_data():
    prog = assemble_constraints(default_paper_instance(), RelaxationConfig(d=4))
    for label, bv in zip(prog.row_labels, prog.b):
        if bv != 0:
            assert label[0] in ("marginal", "boundary")


def test_test_degree_policies_nest():
    p = default_paper_instance(nonlinear=True)
    rows = {pol: assemble_constraints(p, RelaxationConfig(d=6, test_degree_policy=pol)).A.shape[0]
            for pol in ("uniform", "per_row", "exempt_known")}
    assert rows["uniform"] <= rows["per_row"] <= rows["exempt_known"]


def test_insufficient_degree_is_reported():
    # a degree-9 nonlinearity leaves no test function for the pde rows at d=6
    p = HeatControlProblem(nonlinearity=(0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0))
    with pytest.raises(AssemblyError, match="pde"):
        assemble_constraints(p, RelaxationConfig(d=6))


def test_dump_round_trip(tmp_path):
    prog = assemble(default_paper_instance(), RelaxationConfig(d=4))
    dump_program(prog, tmp_path / "prog.txt")
    doc = load_program_dump(tmp_path / "prog.txt")
    A = doc["A"].toarray() if hasattr(doc["A"], "toarray") else np.asarray(doc["A"])
    assert np.array_equal(A, prog.A.toarray())
    assert np.array_equal(doc["b"], prog.b)
