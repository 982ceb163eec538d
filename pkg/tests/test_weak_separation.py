import numpy as np
import pytest
from hypothesis import given, strategies as st

from blendcg.core import ActiveSet
from blendcg.regions import Birkhoff, Cube, L1Ball, Simplex, layered_dag
from blendcg.weak_separation import Negative, OracleCounters, Positive, VertexCache, weak_sep


def test_cache_hit_skips_lmo():
    s = Simplex(4)
    cache = VertexCache(4)
    cache.insert(s.atom(2))
    counters = OracleCounters()
    c = np.array([0.0, 0.0, -1.0, 0.0])
    out = weak_sep(s, cache, c, s.atom(0).coords, 1e-6, 1.0, counters=counters)
    assert isinstance(out, Positive) and out.atom == s.atom(2) and out.from_cache
    assert counters.cache_hits == 1 and counters.lmo_calls == 0


def test_negative_at_linear_optimum():
    s = Simplex(3)
    c = np.array([1.0, -2.0, 0.5])
    out = weak_sep(s, VertexCache(3), c, s.atom(1).coords, 0.3, 1.0)
    assert isinstance(out, Negative) and out.true_gap == 0.0


def test_half_gap_returns_lmo_vertex():
    rng = np.random.default_rng(3)
    s = Simplex(5)
    for _ in range(50):
        c = rng.standard_normal(5)
        x = rng.dirichlet(np.ones(5))
        v = s.lmo(c)
        gap = c @ x - c @ v.coords
        out = weak_sep(s, VertexCache(5), c, x, gap / 2, 1.0)
        assert isinstance(out, Positive) and out.atom == v and not out.from_cache


def test_active_set_scanned_first():
    s = Simplex(3)
    aset = ActiveSet([s.atom(0), s.atom(1)], [0.5, 0.5])
    c = np.array([1.0, -1.0, -5.0])
    out = weak_sep(s, VertexCache(3), c, aset.x, 0.5, 1.0, active_set=aset)
    # e2 clears the threshold before the better e3 is ever looked at
    assert out.atom == s.atom(1) and out.from_cache


def test_lmo_output_is_cached():
    s = Simplex(3)
    cache = VertexCache(3)
    weak_sep(s, cache, np.array([0.0, 0.0, -1.0]), s.atom(0).coords, 10.0, 1.0)
    assert s.atom(2) in cache and len(cache) == 1


def test_validation():
    s = Simplex(3)
    with pytest.raises(ValueError):
        weak_sep(s, VertexCache(3), np.zeros(3), np.ones(3) / 3, 0.0, 1.0)
    with pytest.raises(ValueError):
        weak_sep(s, VertexCache(3), np.zeros(3), np.ones(3) / 3, 1.0, 0.5)
    with pytest.raises(ValueError):
        weak_sep(s, VertexCache(3), np.zeros(4), np.ones(3) / 3, 1.0, 1.0)


def test_cache_cap_evicts_oldest():
    s = Simplex(5)
    cache = VertexCache(5, cap=2)
    for i in range(4):
        cache.insert(s.atom(i))
    assert [a.key for a in cache.atoms] == [("e", 2), ("e", 3)]
    np.testing.assert_array_equal(cache.values(np.arange(5.0)), [2.0, 3.0])
    assert not cache.insert(s.atom(3))


def test_cache_grows_past_initial_buffer():
    s = Simplex(30)
    cache = VertexCache(30)
    for i in range(30):
        cache.insert(s.atom(i))
    np.testing.assert_array_equal(cache.values(np.arange(30.0)), np.arange(30.0))


REGIONS = [Simplex(6), Cube(5), L1Ball(6, 2.0), Birkhoff(4), layered_dag(3, 3, 0.6, seed=1)]


@given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(REGIONS))),
       st.floats(1.0, 4.0), st.floats(0.01, 3.0))
def test_soundness_against_enumeration(seed, ridx, K, phi):
    region = REGIONS[ridx]
    rng = np.random.default_rng(seed)
    verts = np.array([v.coords for v in region.vertices()])
    cache = VertexCache(region.ambient_dim)
    for _ in range(3):
        cache.insert(region.random_vertex(rng))
    x = rng.dirichlet(np.ones(len(verts))) @ verts
    c = rng.standard_normal(region.ambient_dim)
    size = len(cache)
    out = weak_sep(region, cache, c, x, phi, K)
    assert len(cache) >= size
    if isinstance(out, Positive):
        assert c @ (x - out.atom.coords) >= phi / K
    else:
        assert (c @ x - verts @ c).max() <= phi
        assert out.true_gap == pytest.approx((c @ x - verts @ c).max())


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 3.0))
def test_k1_empty_cache_is_exact_decision(seed, phi):
    rng = np.random.default_rng(seed)
    s = Simplex(6)
    c, x = rng.standard_normal(6), rng.dirichlet(np.ones(6))
    gap = c @ x - c.min()
    out = weak_sep(s, VertexCache(6), c, x, phi, 1.0)
    assert isinstance(out, Positive) == (gap >= phi)
