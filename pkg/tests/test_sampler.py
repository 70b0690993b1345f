import collections
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from todashape.model import ModelParams, Theory, log_weight
from todashape.partitions import Partition, dim_mu, enumerate_partitions
from todashape.sampler import (
    arcsine_comparison,
    arcsine_cumulative,
    batch_summary_csv,
    bin_average,
    compare_limit_shape,
    empirical_density,
    rsk_shape,
    rsk_shape_reference,
    sample_batch,
    sample_one,
    thread_count,
)


def test_rsk_trivial_inputs():
    assert rsk_shape([]) == Partition(())
    assert rsk_shape(list(range(7))) == Partition((7,))
    assert rsk_shape(list(range(7, 0, -1))) == Partition((1,) * 7)


def test_rsk_exhaustive_n4_is_plancherel():
    counts = collections.Counter(rsk_shape(p).parts for p in itertools.permutations(range(4)))
    assert counts == {(4,): 1, (3, 1): 9, (2, 2): 4, (2, 1, 1): 9, (1, 1, 1, 1): 1}
    assert counts == {mu.parts: dim_mu(mu) ** 2 for mu in enumerate_partitions(4)}


@pytest.mark.parametrize("n", [5, 6])
def test_rsk_exhaustive_small_n(n):
    counts = collections.Counter(rsk_shape(p).parts for p in itertools.permutations(range(n)))
    assert counts == {mu.parts: dim_mu(mu) ** 2 for mu in enumerate_partitions(n)}


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), unique=True, max_size=300))
@settings(max_examples=60, deadline=None)
def test_compiled_and_reference_rsk_agree(values):
    mu = rsk_shape(values)
    assert mu == rsk_shape_reference(values)
    assert mu.size() == len(values)


@given(st.permutations(list(range(12))))
def test_rsk_shape_of_reverse_is_conjugate(perm):
    assert rsk_shape(perm[::-1]) == rsk_shape(perm).conjugate()


def test_tiny_intensity_gives_empty_shapes():
    batch = sample_batch(1e-6, 200, 1)
    assert all(mu.size() == 0 for mu in batch.shapes)


def test_mean_size_matches_intensity():
    batch = sample_batch(25.0, 10_000, 4)
    sizes = np.array([mu.size() for mu in batch.shapes])
    sigma = sizes.std(ddof=1)
    assert abs(sizes.mean() - 25.0) <= 3 * sigma / math.sqrt(sizes.size)


def test_small_intensity_matches_enumerated_weights():
    xi, n_samples = 0.5, 100_000
    params = ModelParams(Theory.FOUR_D, hbar=1 / math.sqrt(xi))
    weights = {mu.parts: math.exp(log_weight(mu, params) - xi) for n in range(9) for mu in enumerate_partitions(n)}
    batch = sample_batch(xi, n_samples, 2024)
    counts = collections.Counter(mu.parts for mu in batch.shapes)
    tv = sum(abs(counts.get(k, 0) / n_samples - w) for k, w in weights.items())
    tv += sum(c for k, c in counts.items() if k not in weights) / n_samples + (1 - sum(weights.values()))
    assert tv / 2 <= 0.02


def test_batches_are_reproducible_and_thread_independent(monkeypatch):
    a = sample_batch(300.0, 20, 9, threads=1)
    b = sample_batch(300.0, 20, 9, threads=4)
    assert a.shapes == b.shapes
    assert sample_one(300.0, 9, 3) == a.shapes[3]
    assert sample_batch(300.0, 20, 10).shapes != a.shapes
    assert a.seeds[3] == (9, 3)
    monkeypatch.setenv("TODASHAPE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("TODASHAPE_THREADS", "0")
    with pytest.raises(ValueError):
        thread_count()


def test_sample_batch_validation():
    with pytest.raises(ValueError):
        sample_batch(0.0, 10, 1)
    with pytest.raises(ValueError):
        sample_batch(1.0, -1, 1)


def test_vacuum_profile():
    prof = empirical_density(Partition(()), 0.1, 0)
    assert prof(-0.05) == 1.0
    assert prof(0.0) == 0.0
    assert prof(0.05) == 0.0
    with pytest.raises(ValueError):
        empirical_density(Partition(()), 0.0)


partitions = st.lists(st.integers(1, 8), max_size=6).map(lambda xs: Partition(tuple(sorted(xs, reverse=True))))


@given(partitions, st.integers(-3, 3), st.floats(0.05, 1.0))
def test_profile_moments(mu, s, hbar):
    prof, vac = empirical_density(mu, hbar, s), empirical_density(Partition(()), hbar, s)
    x = np.arange(s - len(mu.parts) - 3, s + (mu.parts[0] if mu.parts else 0) + 3)
    mid = hbar * (x + 0.5)
    diff = prof(mid) - vac(mid)
    assert set(np.unique(prof(mid))) <= {0.0, 1.0}
    assert np.sum(diff) == 0
    # first moment of the rescaled profile difference is hbar^2 |mu|
    assert hbar * np.sum(mid * diff) == pytest.approx(hbar**2 * mu.size(), abs=1e-12)


@given(partitions, st.integers(-2, 2))
def test_bin_average_matches_pointwise_mean(mu, s):
    hbar = 0.25
    prof = empirical_density(mu, hbar, s)
    edges = np.linspace(-4, 4, 9)
    fine = np.linspace(-4, 4, 8 * 4000 + 1)
    centers = 0.5 * (fine[1:] + fine[:-1])
    pointwise = prof(centers).reshape(8, -1).mean(axis=1)
    assert np.allclose(bin_average(prof, edges), pointwise, atol=1e-3)


def test_arcsine_cumulative_derivative():
    u = np.array([-2.5, -1.9, -1.0, 0.0, 0.4, 1.7, 2.3])
    h = 1e-6
    d = (arcsine_cumulative(u + h) - arcsine_cumulative(u - h)) / (2 * h)
    expected = np.arccos(np.clip(u / 2, -1, 1)) / math.pi
    assert np.allclose(d, expected, atol=1e-6)


class _Reference:
    def cumulative(self, u):
        return arcsine_cumulative(u)


def test_reference_against_itself():
    edges = np.linspace(-2.5, 2.5, 51)

    class Batch:
        shapes = ()
        hbar = 0.01

    assert compare_limit_shape(Batch(), _Reference(), edges).batch_sup_dist == 0.0
    ref = bin_average(_Reference(), edges)
    assert np.max(np.abs(ref - bin_average(_Reference(), edges))) == 0.0


def test_arcsine_limit_at_large_intensity():
    batch = sample_batch(1e4, 200, 7)
    result = arcsine_comparison(batch)
    assert result.batch_sup_dist <= 0.05


def test_distance_decreases_with_intensity():
    dist = [arcsine_comparison(sample_batch(xi, 100, 3), bin_width=0.25).mean_sup_dist for xi in (1e2, 1e3, 1e4)]
    assert dist[0] > dist[1] > dist[2]


def test_summary_csv():
    batch = sample_batch(50.0, 3, 1)
    text = batch_summary_csv(batch, arcsine_comparison(batch))
    lines = text.split("\n")
    assert lines[0] == "sample_index,n,rows,sup_dist"
    assert len(lines) == 5 and lines[-1] == ""
    idx, n, rows, _ = lines[1].split(",")
    assert int(idx) == 0 and int(n) == batch.shapes[0].size() and int(rows) == len(batch.shapes[0].parts)
