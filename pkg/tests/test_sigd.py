import numpy as np
import pytest
from hypothesis import given, strategies as st

from blendcg.core import ActiveSet, Backtracking, StepKind
from blendcg.objectives import QuadraticObjective, restricted_smoothness_dense
from blendcg.regions import Cube, Simplex
from blendcg.sigd import PromoteDrops, project_direction, ratio_test, sigd_step

from conftest import identity_quadratic, random_quadratic


@pytest.mark.parametrize("c,d", [((1, 1, 1), (0, 0, 0)), ((2, 0), (1, -1)), ((3, 0, 0), (2, -1, -1))])
def test_project_direction(c, d):
    np.testing.assert_allclose(project_direction(np.array(c, float)), d)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=40))
def test_project_direction_sums_to_zero(c):
    assert abs(project_direction(np.array(c)).sum()) <= 1e-12


def test_ratio_test_examples():
    assert ratio_test([0.5, 0.5], [0.25, -0.25]) == 2.0
    assert ratio_test([0.2, 0.3, 0.5], [0.1, 0.2, -0.3]) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        ratio_test([0.5, 0.5], [0.0, 0.0])


@given(st.integers(0, 2**32 - 1))
def test_ratio_test_feasible_and_tight(seed):
    rng = np.random.default_rng(seed)
    lam = rng.dirichlet(np.ones(10))
    d = project_direction(rng.standard_normal(10))
    eta = ratio_test(lam, d)
    y = lam - eta * d
    assert y.min() >= -1e-14
    assert np.abs(y).min() <= 1e-12


def test_drop_to_vertex():
    # f = 1/2 ||x - e1||^2 on conv{e1, e2} from the midpoint lands on e1
    s = Simplex(2)
    f = QuadraticObjective(np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * np.array([1.0, 0.0]))
    aset = ActiveSet([s.atom(0), s.atom(1)], [0.5, 0.5])
    assert f(aset.x) == pytest.approx(0.25)
    np.testing.assert_allclose(aset.matrix @ f.gradient(aset.x), [-0.5, 0.5])
    res = sigd_step(f, aset)
    assert res.kind is StepKind.DROP
    assert [a.key for a in aset.atoms] == [s.atom(0).key]
    assert res.f_value == pytest.approx(0.0)


def test_constant_gradient_drops_to_first_atom():
    s = Simplex(3)
    # gradient of ||x - 0||^2 at the barycenter is constant on the simplex vertices
    aset = ActiveSet(list(s.vertices()), np.ones(3) / 3)
    res = sigd_step(identity_quadratic(3), aset)
    assert res.kind is StepKind.DROP and aset.atoms == [s.atom(0)]


def test_descent_meets_progress_bound():
    s = Simplex(3)
    f = identity_quadratic(3, center=np.ones(3) / 3)
    aset = ActiveSet(list(s.vertices()), [0.6, 0.3, 0.1])
    fx, g = f.value_and_gradient(aset.x)
    c = aset.matrix @ g
    res = sigd_step(f, aset)
    assert res.kind is StepKind.DESCENT
    ls = restricted_smoothness_dense(f, list(s.vertices()))
    assert ls == pytest.approx(2.0)
    assert fx - res.f_value >= (c.max() - c.min()) ** 2 / (4 * ls)
    assert res.progress == pytest.approx(fx - res.f_value)


def test_promote_drops_slack():
    assert PromoteDrops(1e-3, 1.0).slack == 1e-3
    assert PromoteDrops(1e-3, 1e-4).slack == 5e-5
    assert PromoteDrops(1e-3, -1.0).slack == 0.0


def test_promote_drops_accepts_small_increase():
    s = Simplex(2)
    # optimum at (0.9, 0.1): dropping e2 costs 0.02
    f = identity_quadratic(2, center=[0.9, 0.1])
    res_plain = sigd_step(f, ActiveSet([s.atom(0), s.atom(1)], [0.85, 0.15]))
    assert res_plain.kind is StepKind.DESCENT
    aset = ActiveSet([s.atom(0), s.atom(1)], [0.85, 0.15])
    res = sigd_step(f, aset, PromoteDrops(eps0=1.0, last_progress=1.0))
    assert res.kind is StepKind.DROP and len(aset) == 1
    assert res.progress < 0


def test_backtracking_variant_descends():
    s = Simplex(3)
    f = identity_quadratic(3, center=np.ones(3) / 3)
    aset = ActiveSet(list(s.vertices()), [0.6, 0.3, 0.1])
    f0 = f(aset.x)
    res = sigd_step(f, aset, line_search=Backtracking())
    assert res.kind is StepKind.DESCENT and res.f_value < f0


def _random_active_set(rng, region, size):
    atoms, keys = [], set()
    while len(atoms) < size:
        a = region.random_vertex(rng)
        if a.key not in keys:
            keys.add(a.key)
            atoms.append(a)
    return ActiveSet(atoms, rng.dirichlet(np.ones(size)))


@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.booleans())
def test_step_invariants(seed, size, on_cube):
    rng = np.random.default_rng(seed)
    region = Cube(6) if on_cube else Simplex(15)
    f = random_quadratic(rng, 6 if on_cube else 15, region.ambient_dim)
    aset = _random_active_set(rng, region, size)
    before = len(aset)
    keys = {a.key for a in aset.atoms}
    f0 = f(aset.x)
    res = sigd_step(f, aset)
    aset.check()
    assert {a.key for a in aset.atoms} <= keys
    assert region.membership(aset.x, 1e-9)
    if res.kind is StepKind.DROP:
        assert len(aset) < before
    else:
        assert len(aset) == before and res.f_value < f0
    assert res.f_value <= f0 + 1e-12 * (1 + abs(f0))


def test_empty_active_set_rejected():
    aset = ActiveSet.from_atom(Simplex(2).atom(0))
    aset.atoms, aset.weights = [], np.zeros(0)
    with pytest.raises(ValueError):
        sigd_step(identity_quadratic(2), aset)
