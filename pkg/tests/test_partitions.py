import math
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from todashape.partitions import (
    Partition,
    dim_mu,
    enumerate_partitions,
    hook_lengths,
    kappa,
    log_dim_mu,
    maya_delta,
    moment,
    q_moment,
    schur_q_rho,
)

partitions = st.lists(st.integers(1, 7), max_size=6).map(lambda xs: Partition(tuple(sorted(xs, reverse=True))))


@lru_cache(maxsize=None)
def count_standard_tableaux(parts: tuple) -> int:
    """Remove a corner cell in every possible way."""
    if not parts:
        return 1
    total = 0
    for i, p in enumerate(parts):
        below = parts[i + 1] if i + 1 < len(parts) else 0
        if p > below:
            smaller = list(parts)
            smaller[i] -= 1
            total += count_standard_tableaux(tuple(x for x in smaller if x))
    return total


def horizontal_strips_below(parts: tuple):
    """All ``nu`` with ``mu / nu`` a horizontal strip."""
    n = len(parts)

    def rec(i, prefix):
        if i == n:
            yield tuple(x for x in prefix if x)
            return
        upper = parts[i]
        lower = parts[i + 1] if i + 1 < n else 0
        for v in range(lower, upper + 1):
            yield from rec(i + 1, prefix + [v])

    yield from rec(0, [])


def schur_by_branching(parts: tuple, xs: tuple) -> float:
    """``s_mu(x_1..x_N)`` from the branching rule over semistandard tableaux."""

    @lru_cache(maxsize=None)
    def s(p, m):
        if not p:
            return 1.0
        if m == 0 or len(p) > m:
            return 0.0
        x = xs[m - 1]
        return sum(x ** (sum(p) - sum(nu)) * s(nu, m - 1) for nu in horizontal_strips_below(p))

    return s(parts, len(xs))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((1, 2))
    with pytest.raises(ValueError):
        Partition((2, 0))
    assert Partition.of([3, 1, 0, 0]) == Partition((3, 1))


@pytest.mark.parametrize("n, count", [(0, 1), (1, 1), (4, 5), (8, 22), (12, 77)])
def test_partition_counts(n, count):
    parts = enumerate_partitions(n)
    assert len(parts) == count
    assert len(set(parts)) == count
    assert all(mu.size() == n for mu in parts)


def test_reverse_lexicographic_order():
    assert [mu.parts for mu in enumerate_partitions(4)] == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]


def test_hook_lengths_example():
    assert hook_lengths(Partition((3, 1))) == [4, 2, 1, 1]
    assert hook_lengths(Partition(())) == []


@given(partitions)
def test_conjugate_is_involution(mu):
    assert mu.conjugate().conjugate() == mu
    assert sorted(hook_lengths(mu)) == sorted(hook_lengths(mu.conjugate()))


@given(partitions)
@settings(max_examples=60)
def test_dim_matches_tableau_count(mu):
    assert dim_mu(mu) == count_standard_tableaux(mu.parts)
    assert math.isclose(log_dim_mu(mu), math.log(dim_mu(mu)))


@pytest.mark.parametrize("n", range(0, 9))
def test_plancherel_sum(n):
    assert sum(dim_mu(mu) ** 2 for mu in enumerate_partitions(n)) == math.factorial(n)


@given(partitions)
def test_kappa_is_content_sum(mu):
    assert kappa(mu) == 2 * sum(j - i for i, j in mu.cells())
    assert kappa(mu.conjugate()) == -kappa(mu)


@pytest.mark.parametrize("parts", [(), (1,), (2,), (1, 1), (2, 1), (3, 1), (2, 2, 1)])
@pytest.mark.parametrize("q", [0.3, 0.55])
def test_schur_principal_specialization_against_branching(parts, q):
    xs = tuple(q ** (i + 0.5) for i in range(70))
    assert schur_q_rho(Partition(parts), q) == pytest.approx(schur_by_branching(parts, xs), rel=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5])
def test_schur_rejects_q_out_of_range(q):
    with pytest.raises(ValueError):
        schur_q_rho(Partition((1,)), q)


def test_maya_delta_examples():
    assert maya_delta(Partition(())).as_dict() == {0: -1}
    assert maya_delta(Partition((), 2)).as_dict() == {2: -1}
    # mu = (1): site 0 occupied, sites at or below -2 filled
    assert maya_delta(Partition((1,))).as_dict() == {-1: -1, 0: 1, 1: -1}


@given(partitions, st.integers(-3, 3))
def test_maya_moments(mu, s):
    d = maya_delta(mu.with_charge(s))
    assert moment(d, 0) == -1
    assert moment(d, 1) == -s
    assert moment(d, 2) == -(s * s) - 2 * mu.size()


@given(partitions, st.integers(-3, 3), st.integers(1, 3))
def test_q_moment_by_summation_by_parts(mu, s, k):
    """With every site at or below ``L`` filled, the moment is ``q^{k(L+1)} - (1 - q^k) sum q^{kx}`` over particles above ``L``."""
    q = Fraction(1, 3)
    floor = s - len(mu.parts) - 1
    particles = [p - i + s for i, p in enumerate(mu.parts, start=1)]
    expected = q ** (k * (floor + 1)) - (1 - q**k) * sum(q ** (k * x) for x in particles)
    assert q_moment(maya_delta(mu.with_charge(s)), k, q) == expected


def test_q_moment_single_box():
    q = Fraction(2, 5)
    assert q_moment(maya_delta(Partition((1,))), 1, q) == 1 / q - 1 + q
