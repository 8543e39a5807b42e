import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatsos.extraction import (
    Controller, ControllerSpec, DegreeBudgetError, build_system, controller_from_dict, evaluate_control,
    extract, load_controller, save_controller, solve_coeffs,
)
from heatsos.polybasis import basis_size
from oracles import synthetic_pseudo_moments

X = np.linspace(0, 1, 101)


def _y_rich(T, X):
    return T * X * (1 - X) + T**2 * X**2 * (1 - X)


def _u_from_kernel(coeffs):
    """u(t) = int y * (c0 + c1 t + c2 x) dx for the rich profile, analytically."""
    c0, c1, c2 = coeffs
    # int y dx = t/6 + t^2/12,  int x y dx = t/12 + t^2/20
    return lambda T: (c0 + c1 * T) * (T / 6 + T**2 / 12) + c2 * (T / 12 + T**2 / 20)


def test_zero_trajectory_gives_zero_kernel():
    pm = synthetic_pseudo_moments(6, lambda T, X: 0 * T, lambda T: 0 * T)
    spec = ControllerSpec("linear", 1, 3)
    Phi, B = build_system(pm, spec)
    assert not np.any(Phi) and not np.any(B)
    ctrl = solve_coeffs(Phi, B, spec)
    assert np.array_equal(ctrl.coeffs, np.zeros(3))


def test_zero_kernel_consistency():
    pm = synthetic_pseudo_moments(6, lambda T, X: T * X * (1 - X), lambda T: 0 * T)
    ctrl = extract(pm, ControllerSpec("linear", 1, 4))
    assert np.abs(ctrl.coeffs).max() < 1e-9
    assert ctrl.residual < 1e-9


def test_recovers_linear_kernel():
    truth = (2.0, 0.0, -3.0)
    pm = synthetic_pseudo_moments(8, _y_rich, _u_from_kernel(truth))
    ctrl = extract(pm, ControllerSpec("linear", 1, 6))
    assert ctrl.mode == "least-squares"
    assert np.allclose(ctrl.coeffs, truth, atol=1e-6)
    assert ctrl.residual < 1e-9


def test_single_mode_profile_is_not_identifiable():
    # with y = t x(1-x) the kernels 1 and x weight y identically up to a factor,
    # so only the reproduced control, not the coefficients, is determined
    pm = synthetic_pseudo_moments(8, lambda T, X: T * X * (1 - X), lambda T: T / 12)
    spec = ControllerSpec("linear", 1, 6)
    Phi, B = build_system(pm, spec)
    assert np.linalg.matrix_rank(B, tol=1e-10 * np.abs(B).max()) == 2
    ctrl = solve_coeffs(Phi, B, spec)
    assert np.linalg.norm(B @ np.array([2.0, 0.0, -3.0]) - Phi) < 1e-12
    assert ctrl.residual < 1e-9
    for t in (0.2, 0.7):
        y = t * X * (1 - X)
        assert float(np.trapezoid(ctrl.kernel(t, X, y), X)) == pytest.approx(t / 12, rel=1e-3)


def test_recovers_semilinear_kernel():
    # gamma = y * (1 - x) + 4 * y^3 with the rich profile
    def u(T):
        q = np.polynomial.legendre.leggauss(30)
        xs, ws = (q[0] + 1) / 2, q[1] / 2
        Y = _y_rich(T[:, None], xs[None, :]) if np.ndim(T) else _y_rich(T, xs)
        return np.sum(ws * (Y * (1 - xs) + 4 * Y**3), axis=-1)

    pm = synthetic_pseudo_moments(8, _y_rich, u)
    spec = ControllerSpec("semilinear", 1, 5, r=3, m_r=0)
    ctrl = extract(pm, spec)
    assert np.allclose(ctrl.coeffs, [1.0, 0.0, -1.0], atol=1e-6)
    assert np.allclose(ctrl.coeffs_delta, [4.0], atol=1e-6)


def test_identity_system():
    ctrl = solve_coeffs(np.array([1.0, 2.0]), np.eye(2), ControllerSpec("general", 0, 1))
    assert np.allclose(ctrl.coeffs, [1, 2]) and ctrl.residual == 0


def test_minimum_norm_example():
    ctrl = solve_coeffs(np.array([2.0]), np.array([[1.0, 1.0]]), ControllerSpec("linear", 1, 0))
    assert ctrl.mode == "minimum-norm"
    assert np.allclose(ctrl.coeffs[:2], [1, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_minimum_norm_is_orthogonal_to_null_space(rows, extra, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((rows, rows + extra))
    Phi = rng.standard_normal(rows)
    c = solve_coeffs(Phi, B, ControllerSpec("general", 0, rows - 1)).coeffs
    assert np.linalg.norm(B @ c - Phi) <= 1e-9 * (1 + np.linalg.norm(Phi))
    _, _, Vt = np.linalg.svd(B)
    null = Vt[rows:]
    assert np.abs(null @ c).max() <= 1e-9 * (1 + np.linalg.norm(c))


def test_rank_deficient_least_squares_is_flagged():
    B = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    ctrl = solve_coeffs(np.array([1.0, 2.0, 3.0]), B, ControllerSpec("general", 0, 2))
    assert ctrl.mode == "least-squares" and ctrl.rank == 1


@pytest.mark.parametrize("spec,d,needle", [
    (ControllerSpec("general", 2, 5), 6, "min(d-1, d-m)"),
    (ControllerSpec("linear", 0, 6), 6, "d-m-1"),
    (ControllerSpec("semilinear", 0, 4, 3, 0), 6, "d-m_r-r"),
])
def test_budget_errors_name_the_inequality(spec, d, needle):
    with pytest.raises(DegreeBudgetError, match=needle.replace("(", r"\(").replace(")", r"\)")):
        spec.check_budget(d)


def test_spec_validation():
    with pytest.raises(ValueError):
        ControllerSpec("semilinear", 1, 2, r=1, m_r=0)
    with pytest.raises(ValueError):
        ControllerSpec("quadratic", 1, 2)
    assert ControllerSpec("general", 2, 1).n_coeff == basis_size(3, 2)
    assert ControllerSpec("linear", 2, 1).n_coeff == basis_size(2, 2)
    assert ControllerSpec("semilinear", 1, 1, 3, 0).n_coeff == 4


def test_evaluate_constant_kernel():
    ctrl = Controller(ControllerSpec("general", 0, 0), np.array([-0.7]))
    for y in (np.zeros_like(X), np.sin(np.pi * X), X**3):
        assert evaluate_control(ctrl, 0.3, X, y) == pytest.approx(-0.7)


def test_evaluate_linear_kernel():
    ctrl = Controller(ControllerSpec("linear", 0, 0), np.array([1.0]))
    fine = np.linspace(0, 1, 2001)
    assert evaluate_control(ctrl, 0.0, fine, fine * (1 - fine)) == pytest.approx(1 / 6, abs=1e-7)


def test_semilinear_zero_profile():
    ctrl = Controller(ControllerSpec("semilinear", 1, 0, 3, 0), np.array([-15.005, 21.374, 1.231]),
                      np.array([3.369]))
    assert evaluate_control(ctrl, 0.5, X, np.zeros_like(X)) == 0


def test_clamping():
    ctrl = Controller(ControllerSpec("general", 0, 0), np.array([5.0]), u_box=(-1.2, 1.2))
    assert evaluate_control(ctrl, 0.0, X, X) == 1.2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.floats(-3, 3), st.floats(0, 1))
def test_evaluation_linear_in_coefficients(c1, c2, a, t):
    spec = ControllerSpec("linear", 1, 0)
    y = np.sin(np.pi * X) * (1 + X)
    u = lambda c: evaluate_control(Controller(spec, np.asarray(c)), t, X, y)  # noqa: E731
    mixed = u(np.add(c1, np.multiply(a, c2)))
    assert mixed == pytest.approx(u(c1) + a * u(c2), abs=1e-9)


def test_controller_round_trip(tmp_path):
    ctrl = Controller(ControllerSpec("semilinear", 1, 2, 3, 0), np.array([-1.0, 2.0, 0.5]), np.array([3.0]),
                      1e-3, "minimum-norm", 1, (-8.0, 8.0))
    save_controller(ctrl, tmp_path / "c.json")
    back = load_controller(tmp_path / "c.json")
    assert back.spec == ctrl.spec and back.u_box == ctrl.u_box
    assert np.array_equal(back.coeffs, ctrl.coeffs) and np.array_equal(back.coeffs_delta, ctrl.coeffs_delta)
    assert controller_from_dict(ctrl.to_dict()).mode == "minimum-norm"
