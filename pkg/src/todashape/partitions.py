"""Partitions, hook lengths, Maya diagrams and their moments.

A partition carries an optional integer charge ``s``.  Its Maya diagram is the
set of occupied sites ``{mu_i - i + s : i >= 1}`` on the integer line, and the
difference density ``Delta rho(x) = rho(x) - rho(x - 1)`` is supported on
finitely many sites, so every moment below is a finite sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing positive parts with an integer charge."""

    parts: tuple[int, ...] = ()
    charge: int = 0

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"parts must be positive, got {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be weakly decreasing, got {parts}")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "charge", int(self.charge))

    @classmethod
    def of(cls, parts: Sequence[int], charge: int = 0) -> "Partition":
        """Build from any sequence, dropping trailing zeros."""
        return cls(tuple(p for p in parts if p != 0), charge)

    def size(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def with_charge(self, charge: int) -> "Partition":
        return Partition(self.parts, charge)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition((), self.charge)
        return Partition(
            tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0])),
            self.charge,
        )

    def cells(self) -> Iterator[tuple[int, int]]:
        """Cells ``(i, j)`` with 0-based row ``i`` and column ``j``."""
        for i, p in enumerate(self.parts):
            for j in range(p):
                yield i, j


@dataclass(frozen=True)
class MayaDensity:
    """Finitely supported difference density of a charged Maya diagram."""

    support_points: tuple[int, ...]
    values: tuple[int, ...]

    def items(self) -> Iterator[tuple[int, int]]:
        return zip(self.support_points, self.values)

    def as_dict(self) -> dict[int, int]:
        return dict(self.items())


def enumerate_partitions(n: int) -> list[Partition]:
    """All partitions of ``n`` in reverse-lexicographic order."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out: list[Partition] = []

    def rec(remaining: int, cap: int, prefix: list[int]) -> None:
        if remaining == 0:
            out.append(Partition(tuple(prefix)))
            return
        for part in range(min(remaining, cap), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(n, n, [])
    return out


def hook_lengths(mu: Partition) -> list[int]:
    """Hook length of every cell in row-major order."""
    conj = mu.conjugate().parts
    return [(mu.parts[i] - j - 1) + (conj[j] - i - 1) + 1 for i, j in mu.cells()]


def dim_mu(mu: Partition) -> int:
    """Number of standard Young tableaux of shape ``mu`` (exact)."""
    return math.factorial(mu.size()) // math.prod(hook_lengths(mu))


def log_dim_mu(mu: Partition) -> float:
    n = mu.size()
    if n <= 20:
        return math.log(dim_mu(mu))
    return math.lgamma(n + 1) - sum(math.log(h) for h in hook_lengths(mu))


def kappa(mu: Partition) -> int:
    return sum(p * (p - 2 * i + 1) for i, p in enumerate(mu.parts, start=1))


def _check_q(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def log_schur_q_rho(mu: Partition, q: float) -> float:
    """Logarithm of the Schur function at the principal specialization q^rho."""
    _check_q(q)
    log_q = math.log(q)
    hooks = hook_lengths(mu)
    return log_q * (sum(hooks) / 2 - kappa(mu) / 4) - sum(math.log1p(-(q**h)) for h in hooks)


def schur_q_rho(mu: Partition, q: float) -> float:
    return math.exp(log_schur_q_rho(mu, q))


def maya_delta(mu: Partition) -> MayaDensity:
    s = mu.charge
    occupied = {p - i + s for i, p in enumerate(mu.parts, start=1)}
    floor = s - len(mu.parts) - 1  # every site at or below this one is filled
    top = (mu.parts[0] if mu.parts else 0) + s

    def rho(x: int) -> int:
        return 1 if x <= floor or x in occupied else 0

    points, values = [], []
    for x in range(floor, top + 1):
        delta = rho(x) - rho(x - 1)
        if delta:
            points.append(x)
            values.append(delta)
    return MayaDensity(tuple(points), tuple(values))


def moment(d: MayaDensity, k: int) -> int:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return sum(x**k * v for x, v in d.items())


def q_moment(d: MayaDensity, k: int, q):
    """q-deformed observable ``-sum_x q^(k x) Delta rho(x)``.

    Works with floats or exact ``Fraction`` inputs.
    """
    if k < 1:
        raise ValueError("k must be positive")
    return -sum(q ** (k * x) * v for x, v in d.items())
