import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from blendcg.core import Atom
from blendcg.objectives import (InstanceSpec, Lasso, QuadraticObjective, SignalRecovery,
                                SimplexQuadratic, StructuredRegression, generate, load_instance,
                                power_iteration, restricted_smoothness,
                                restricted_smoothness_dense, save_instance)
from blendcg.regions import Birkhoff, DagPath, L1Ball, Simplex

from conftest import identity_quadratic, random_quadratic


def test_identity_value_and_gradient():
    f = identity_quadratic(2)
    x = np.array([1.0, 1.0])
    assert f(x) == 2.0
    np.testing.assert_array_equal(f.gradient(x), [2.0, 2.0])


def test_minimizer_has_zero_gradient():
    f = QuadraticObjective(np.eye(2), np.array([1.0, 0.0]))
    x = np.array([1.0, 0.0])
    assert f(x) == 0.0
    np.testing.assert_array_equal(f.gradient(x), [0.0, 0.0])


def test_gradient_finite_differences(rng):
    f = random_quadratic(rng, 5, 5)
    x = rng.standard_normal(5)
    h = 1e-6
    fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(5)])
    g = f.gradient(x)
    assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) <= 1e-6


def test_gradient_dimension_check():
    with pytest.raises(ValueError):
        identity_quadratic(3).gradient(np.zeros(2))


def test_shape_validation():
    with pytest.raises(ValueError):
        QuadraticObjective(np.eye(2), np.zeros(3))


def test_sparse_matches_dense(rng):
    A = sp.random(8, 5, density=0.5, random_state=1, format="csr")
    b = rng.standard_normal(8)
    fs, fd = QuadraticObjective(A, b), QuadraticObjective(A.toarray(), b)
    x = rng.standard_normal(5)
    assert fs(x) == pytest.approx(fd(x))
    np.testing.assert_allclose(fs.gradient(x), fd.gradient(x))
    assert fs.L == pytest.approx(fd.L)


def test_line_increment_matches_difference(rng):
    f = random_quadratic(rng, 6, 4)
    a, d = rng.standard_normal(4), rng.standard_normal(4)
    for g in (0.0, 0.3, 1.0):
        assert f.line(a, d)(g) == pytest.approx(f(a + g * d) - f(a), abs=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8))
def test_L_alpha_bracket_rayleigh(seed, m, n):
    rng = np.random.default_rng(seed)
    f = random_quadratic(rng, m, n)
    H = f.hessian()
    for _ in range(100):
        z = rng.standard_normal(n)
        q = z @ H @ z / (z @ z)
        assert f.alpha - 1e-9 * f.L <= q <= f.L * (1 + 1e-9)
    if m < n:
        assert f.alpha == 0.0


def test_power_iteration_matches_eigvalsh(rng):
    M = rng.standard_normal((10, 10))
    S = M @ M.T
    assert power_iteration(lambda v: S @ v, 10, tol=1e-13) == pytest.approx(
        np.linalg.eigvalsh(S)[-1], rel=1e-8)
    assert power_iteration(lambda v: 0 * v, 3) == 0.0


def test_restricted_smoothness_identity():
    s = Simplex(3)
    atoms = [s.atom(0), s.atom(1)]
    f = identity_quadratic(3)
    assert restricted_smoothness(f, atoms) == pytest.approx(2.0)
    # equality case of the cap L D^2 |S| / 4 = 2 * 2 * 2 / 4
    assert f.L * s.diameter() ** 2 * len(atoms) / 4 == pytest.approx(2.0)
    assert restricted_smoothness(f, [s.atom(0)]) == 0.0


def test_restricted_smoothness_power_vs_dense(rng):
    s = Simplex(10)
    for _ in range(20):
        f = random_quadratic(rng, 10, 10)
        atoms = [s.atom(i) for i in rng.choice(10, 4, replace=False)]
        dense = restricted_smoothness_dense(f, atoms)
        assert restricted_smoothness(f, atoms, tol=1e-14) == pytest.approx(dense, rel=1e-7)


def test_restricted_smoothness_equals_L_for_isotropic_simplex():
    # Hessian 2 lam I over the full simplex: the restricted value equals L
    f = QuadraticObjective(np.sqrt(3.0) * np.eye(6), np.zeros(6))
    s = Simplex(6)
    assert restricted_smoothness_dense(f, list(s.vertices())) == pytest.approx(f.L)


def test_restricted_smoothness_projects_out_constant_direction():
    # far-away cube vertices: full Hessian of the pullback is large along the
    # all-ones direction, which the simplex never moves in
    A = np.eye(3)
    atoms = [Atom(i, np.array(v, float)) for i, v in enumerate([(10, 10, 10), (10, 10, 11)])]
    f = QuadraticObjective(A, np.zeros(3))
    assert restricted_smoothness_dense(f, atoms) == pytest.approx(1.0)


def test_generate_lasso_deterministic():
    spec = InstanceSpec(Lasso(40, 200, 10, 1.0), seed=3)
    a, b = generate(spec), generate(spec)
    assert a.objective.A.tobytes() == b.objective.A.tobytes()
    assert a.objective.b.tobytes() == b.objective.b.tobytes()
    assert isinstance(a.region, L1Ball) and a.region.tau == 1.0
    assert np.count_nonzero(a.extras["ground_truth"]) == 10


def test_generate_signal_shapes():
    inst = generate(InstanceSpec(SignalRecovery(100, 300, 0.05, 0.05), seed=1))
    A = inst.objective.A
    assert sp.issparse(A) and A.shape == (100, 300)
    assert A.nnz == pytest.approx(0.05 * 100 * 300, rel=0.01)
    assert inst.region.tau == np.abs(inst.extras["ground_truth"]).sum()


def test_simplex_quadratic_minimizer_is_infeasible():
    inst = generate(InstanceSpec(SimplexQuadratic(20), seed=0))
    f = inst.objective
    # normal equations recover the planted unconstrained minimizer
    x = np.linalg.solve(f.A.T @ f.A, f.A.T @ f.b)
    np.testing.assert_allclose(x, inst.extras["unconstrained_minimizer"], atol=1e-8)
    assert x.min() < 0
    assert f.alpha > 0
    assert f.L / f.alpha == pytest.approx(10.0)


@pytest.mark.parametrize("region,cls", [("birkhoff", Birkhoff), ("simplex", Simplex),
                                        ("dagpath", DagPath)])
def test_structured_regression(region, cls):
    inst = generate(InstanceSpec(StructuredRegression(region, 4), seed=0))
    assert isinstance(inst.region, cls)
    assert inst.objective.dim == inst.region.ambient_dim
    assert inst.region.membership(inst.start.coords)


def test_invalid_specs():
    with pytest.raises(ValueError):
        generate(InstanceSpec(Lasso(10, 5, 6)))
    with pytest.raises(ValueError):
        generate(InstanceSpec(SignalRecovery(10, 5, 1.5, 0.1)))
    with pytest.raises(ValueError):
        generate(InstanceSpec(StructuredRegression("torus", 3)))
    with pytest.raises(ValueError):
        generate(InstanceSpec(SimplexQuadratic(1)))


def test_spec_json_roundtrip():
    spec = InstanceSpec(SignalRecovery(10, 30, 0.1, 0.01), seed=9)
    assert InstanceSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize("family", [Lasso(20, 40, 4), SignalRecovery(20, 40, 0.2, 0.01)])
def test_save_load_roundtrip(tmp_path, family):
    inst = generate(InstanceSpec(family, seed=5))
    save_instance(inst, tmp_path)
    back = load_instance(tmp_path)
    x = np.random.default_rng(0).standard_normal(inst.objective.dim)
    assert back.objective(x) == inst.objective(x)
    assert back.spec == inst.spec
