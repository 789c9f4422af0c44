import numpy as np
import pytest

from sgproc import potentials
from sgproc.potentials import CustomPotential, PotentialSet, QuadraticPotential


def example_wells():
    """Three 1-d quadratic wells; averaged minimiser at 0.5."""
    return potentials.from_least_squares(
        [
            (np.array([[1.0]]), np.array([-2.0])),
            (np.array([[1.0]]), np.array([1.5])),
            (np.array([[1.0]]), np.array([2.0])),
        ]
    )


def random_psd(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim + 2, dim))
    return g.T @ g / dim


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def quad_value(p, x):
    x = np.asarray(x, dtype=float)
    return 0.5 * x @ p.a_mat @ x - p.b_vec @ x


def test_quadratic_validation():
    with pytest.raises(ValueError):
        QuadraticPotential(a_mat=np.array([[1.0, 2.0], [0.0, 1.0]]), b_vec=np.zeros(2))
    with pytest.raises(ValueError):
        QuadraticPotential(a_mat=np.array([[-1.0]]), b_vec=np.zeros(1))
    with pytest.raises(ValueError):
        QuadraticPotential(a_mat=np.eye(2), b_vec=np.zeros(3))


def test_gradient_matches_finite_differences():
    dim = 4
    a = random_psd(dim, seed=1)
    b = np.random.default_rng(2).normal(size=dim)
    p = QuadraticPotential(a_mat=a, b_vec=b)
    x = np.random.default_rng(3).normal(size=dim)
    want = fd_gradient(lambda z: quad_value(p, z), x)
    got = p.gradient_rows(x[None, :])[0]
    assert np.max(np.abs(got - want)) / max(1.0, np.max(np.abs(want))) < 1e-6


def test_kappa_is_smallest_eigenvalue():
    a = random_psd(3, seed=4)
    p = QuadraticPotential(a_mat=a, b_vec=np.zeros(3))
    assert abs(p.kappa - np.linalg.eigvalsh(a)[0]) < 1e-12


def test_exact_flow_reaches_minimiser():
    p = QuadraticPotential(a_mat=np.array([[2.0]]), b_vec=np.array([3.0]))
    x = potentials.exact_flow(p, [10.0], 50.0)
    assert abs(x[0] - 1.5) < 1e-12


def test_exact_flow_matches_fine_rk4():
    """Closed-form flow against an in-test RK4 integration."""
    dim = 3
    p = QuadraticPotential(
        a_mat=random_psd(dim, seed=5), b_vec=np.array([0.3, -1.0, 0.7])
    )
    x = np.array([1.0, -2.0, 0.5])
    t = 1.7
    steps = 4000
    h = t / steps
    y = x.copy()
    rhs = lambda z: -(p.a_mat @ z - p.b_vec)
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    got = potentials.exact_flow(p, x, t)
    assert np.max(np.abs(got - y)) < 1e-9


def test_flow_semigroup_property():
    p = QuadraticPotential(a_mat=random_psd(2, seed=6), b_vec=np.array([1.0, -1.0]))
    x = np.array([[3.0, -4.0]])
    together = p.flow_rows(x, 2.3)
    stepwise = p.flow_rows(p.flow_rows(x, 1.0), 1.3)
    np.testing.assert_allclose(stepwise, together, atol=1e-12)


def test_singular_direction_drifts_linearly():
    # zero curvature along x1: the projected linear term pushes at
    # constant speed while x0 contracts
    a = np.diag([1.0, 0.0])
    b = np.array([2.0, 0.5])
    p = QuadraticPotential(a_mat=a, b_vec=b)
    got = p.flow_rows(np.array([[0.0, 0.0]]), 3.0)[0]
    np.testing.assert_allclose(got, [2.0 * (1 - np.exp(-3.0)), 0.5 * 3.0], atol=1e-12)
    assert p.kappa == 0.0


def test_custom_potential_shape_check():
    p = CustomPotential(grad=lambda x: x[:, :1])
    with pytest.raises(ValueError):
        p.gradient_rows(np.zeros((2, 3)))


def test_potential_set_properties():
    ps = example_wells()
    assert ps.n == 3
    assert ps.dim == 1
    assert ps.all_quadratic
    assert ps.convexity_regime == "all_positive"
    np.testing.assert_allclose(ps.kappas, [1.0, 1.0, 1.0])


def test_convexity_regimes():
    flat = QuadraticPotential(a_mat=np.zeros((1, 1)), b_vec=np.zeros(1))
    steep = QuadraticPotential(a_mat=np.array([[2.0]]), b_vec=np.zeros(1))
    assert PotentialSet((flat, steep), 1).convexity_regime == "sum_positive"
    assert PotentialSet((flat, flat), 1).convexity_regime == "degenerate"


def test_gradient_and_full_gradient():
    ps = example_wells()
    np.testing.assert_allclose(potentials.gradient(ps, 0, [0.0]), [2.0])
    np.testing.assert_allclose(potentials.gradient(ps, 2, [0.0]), [-2.0])
    np.testing.assert_allclose(potentials.full_gradient(ps, [0.5]), [0.0], atol=1e-15)
    with pytest.raises(ValueError):
        potentials.gradient(ps, 3, [0.0])


def test_minimiser():
    ps = example_wells()
    np.testing.assert_allclose(potentials.minimiser(ps), [0.5])
    flat = PotentialSet(
        (QuadraticPotential(a_mat=np.zeros((1, 1)), b_vec=np.ones(1)),), 1
    )
    with pytest.raises(ValueError):
        potentials.minimiser(flat)


def test_from_least_squares_normal_equations():
    rng = np.random.default_rng(8)
    g = rng.normal(size=(5, 2))
    y = rng.normal(size=5)
    ps = potentials.from_least_squares([(g, y)])
    member = ps.members[0]
    np.testing.assert_allclose(member.a_mat, g.T @ g, atol=1e-12)
    np.testing.assert_allclose(member.b_vec, g.T @ y, atol=1e-12)
    # the flow minimum is the least-squares solution
    want, *_ = np.linalg.lstsq(g, y, rcond=None)
    got = potentials.exact_flow(member, np.zeros(2), 200.0)
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_load_least_squares_csv(tmp_path):
    rng = np.random.default_rng(9)
    paths = []
    blocks = []
    for k in range(2):
        g = rng.normal(size=(4, 2))
        y = rng.normal(size=4)
        arr = np.column_stack([g, y])
        path = tmp_path / f"block{k}.csv"
        np.savetxt(path, arr, delimiter=",")
        paths.append(path)
        blocks.append((g, y))
    ps = potentials.load_least_squares_csv(paths)
    want = potentials.from_least_squares(blocks)
    for got_m, want_m in zip(ps.members, want.members):
        np.testing.assert_allclose(got_m.a_mat, want_m.a_mat, atol=1e-12)
        np.testing.assert_allclose(got_m.b_vec, want_m.b_vec, atol=1e-12)


def test_population_field():
    mats = [np.array([[0.9, 0.1], [0.1, 0.1]]), np.array([[0.1, 0.1], [0.1, 0.9]])]
    np.testing.assert_allclose(
        potentials.population_field(mats, 0, [1.0, 2.0]), mats[0] @ [1.0, 2.0]
    )
    with pytest.raises(ValueError):
        potentials.population_field(mats, 2, [1.0, 2.0])


def test_mat_apply_is_order_stable():
    # the same rows must map to the same outputs regardless of how many
    # other rows ride along in the block
    rng = np.random.default_rng(10)
    m = rng.normal(size=(3, 3))
    x = rng.normal(size=(7, 3))
    full = potentials._mat_apply(x, m)
    one = potentials._mat_apply(x[2:3], m)
    np.testing.assert_array_equal(full[2:3], one)
