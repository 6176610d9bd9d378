import numpy as np
import pytest
from scipy import stats

from percolab.rng import EdgeRandomness, derive_seed


@pytest.mark.parametrize("n_edges", [1, 7, 4096, 4097, 10_000])
def test_open_edges_is_threshold_of_values(n_edges):
    r = EdgeRandomness(11, n_edges)
    vals = r.values()
    assert np.all((vals > 0) & (vals < 1))
    for p in (0.0, 0.01, 0.3, 0.99, 1.0):
        idx, v = r.open_edges(p)
        expect = np.flatnonzero(vals < p)
        assert np.array_equal(np.sort(idx), expect)
        assert np.array_equal(v, vals[idx])
    assert r.open_edges(1.0)[0].size == n_edges


def test_single_value_matches_bulk():
    r = EdgeRandomness(5, 9000)
    vals = r.values()
    for e in (0, 1, 4095, 4096, 8191, 8999):
        assert r.value(e) == vals[e]
    with pytest.raises(IndexError):
        r.value(9000)


def test_monotone_coupling():
    r = EdgeRandomness(3, 50_000)
    prev = set()
    for p in np.linspace(0, 1, 11):
        cur = set(r.open_edges(p)[0].tolist())
        assert prev <= cur
        prev = cur


def test_marginal_uniform_within_configuration():
    vals = EdgeRandomness(1, 200_000).values()
    assert stats.kstest(vals, "uniform").pvalue > 1e-3


def test_marginal_uniform_across_seeds():
    for e in (0, 2049, 4095):
        vals = np.array([EdgeRandomness(derive_seed(9, j), 4096).value(e) for j in range(2000)])
        assert stats.kstest(vals, "uniform").pvalue > 1e-3


def test_neighbouring_edges_uncorrelated():
    vals = EdgeRandomness(2, 200_000).values()
    r = np.corrcoef(vals[:-1], vals[1:])[0, 1]
    assert abs(r) < 4 / np.sqrt(vals.size)
    # open counts per block are binomial, no within-block constraint
    counts = np.array([(EdgeRandomness(derive_seed(4, j), 4096).open_edges(0.1)[0]).size for j in range(400)])
    assert abs(counts.mean() - 409.6) < 4 * np.sqrt(4096 * 0.09 / 400)
    assert abs(counts.var(ddof=1) / (4096 * 0.09) - 1) < 0.25


def test_determinism_and_seed_sensitivity():
    a = EdgeRandomness(42, 10_000).values()
    b = EdgeRandomness(42, 10_000).values()
    c = EdgeRandomness(43, 10_000).values()
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_derive_seed():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    seen = {derive_seed(1, "a", j) for j in range(1000)}
    assert len(seen) == 1000
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert derive_seed(1, "a") != derive_seed(2, "a")
    assert 0 <= derive_seed(-5, "x") < 2**64
    big = derive_seed(2**64 - 1, 2**70)
    assert 0 <= big < 2**64
