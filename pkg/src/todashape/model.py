"""Boltzmann weights, truncated partition functions and the energy functionals.

Two theories are supported.  In the 4D theory a partition is weighted by the
squared Plancherel-type factor ``(Lambda0/hbar)^{2|mu|} / prod h^2``.  In the 5D
theory the weight is the squared Schur function at ``q^rho`` times ``Q^{|mu|}``
with ``q = exp(-R hbar)`` and ``Q = (R Lambda0)^2``.  Both are deformed by the
couplings ``t_k`` through the observables ``Phi_k``.

The kernel tables replace the Barnes-type special functions: ``g`` solves a
second-difference equation on the integer grid, and the cell-sum identity
turns a product over hook lengths into a quadratic form in the Maya density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .partitions import (
    Partition,
    enumerate_partitions,
    hook_lengths,
    log_dim_mu,
    log_schur_q_rho,
    maya_delta,
    moment,
    q_moment,
)

OVERFLOW_LOG = 700.0


class Theory(str, Enum):
    FOUR_D = "4D"
    FIVE_D = "5D"


class WeightOverflowError(OverflowError):
    """A log-weight exceeded the representable range."""


@dataclass(frozen=True)
class ModelParams:
    """One model instance.

    ``t[0]`` is the coupling ``t_1``.  ``hbar`` is always the expansion
    parameter; in 5D it enters through ``q = exp(-R hbar)``.
    """

    theory: Theory
    hbar: float = 1.0
    lambda0: float = 1.0
    R: float = 1.0
    s: float = 0
    t: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "theory", Theory(self.theory))
        object.__setattr__(self, "t", tuple(self.t))
        if self.hbar <= 0 or self.lambda0 <= 0:
            raise ValueError("hbar and lambda0 must be positive")
        if self.theory is Theory.FIVE_D:
            if self.R <= 0:
                raise ValueError("R must be positive")
            if not 0 < self.Q < 1:
                raise ValueError(f"5D requires 0 < (R lambda0)^2 < 1, got {self.Q}")

    @property
    def q(self) -> float:
        return math.exp(-self.R * self.hbar)

    @property
    def Q(self) -> float:
        return (self.R * self.lambda0) ** 2

    @property
    def K(self) -> int:
        return len(self.t)


def phi_4d(mu: Partition, s: int, k: int, hbar):
    """``hbar^{k+1}/(k+1)`` times the degree ``k+1`` observable, as a finite sum."""
    if k < 1:
        raise ValueError("k must be positive")
    m = k + 1
    total = s**m
    for i, p in enumerate(mu.parts, start=1):
        total += (s + p - i + 1) ** m - (s - i + 1) ** m
        total -= (s + p - i) ** m - (s - i) ** m
    return hbar**m * total / m


def phi_4d_moment(mu: Partition, s: int, k: int, hbar):
    """Same quantity as :func:`phi_4d` computed as ``-sum (hbar x)^{k+1}/(k+1) Delta rho``."""
    return -(hbar ** (k + 1)) * moment(maya_delta(mu.with_charge(s)), k + 1) / (k + 1)


def _check_q(q) -> None:
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def phi_5d(mu: Partition, s: int, k: int, q):
    """5D observable from the reorganized finite sum over rows."""
    _check_q(q)
    qk = q**k
    total = qk * (1 - qk**s) / (1 - qk)
    for i, p in enumerate(mu.parts, start=1):
        total += qk ** (s + p - i + 1) - qk ** (s - i + 1)
    return total


def phi_5d_moment(mu: Partition, s: int, k: int, q):
    """Same quantity via the q-moment of the Maya density."""
    _check_q(q)
    qk = q**k
    o5 = q_moment(maya_delta(mu.with_charge(s)), k, q)
    return -qk / (1 - qk) * o5 + qk / (1 - qk)


def _charge(params: ModelParams, s: int | None) -> int:
    value = params.s if s is None else s
    if int(value) != value:
        raise ValueError(f"the discrete model needs an integer charge, got {value}")
    return int(value)


def _coupling_term(mu: Partition, s: int, params: ModelParams) -> float:
    total = 0.0
    for k, tk in enumerate(params.t, start=1):
        if tk == 0:
            continue
        if params.theory is Theory.FOUR_D:
            total += tk * phi_4d(mu, s, k, params.hbar)
        else:
            total += tk * phi_5d(mu, s, k, params.q)
    return total


def log_weight(mu: Partition, params: ModelParams, s: int | None = None) -> float:
    s = _charge(params, s)
    n = mu.size()
    if params.theory is Theory.FOUR_D:
        main = (
            2 * log_dim_mu(mu)
            - 2 * n * math.log(params.hbar)
            - 2 * math.lgamma(n + 1)
            + (2 * n + s * (s + 1)) * math.log(params.lambda0)
        )
    else:
        main = 2 * log_schur_q_rho(mu, params.q) + (n + s * (s + 1) / 2) * math.log(params.Q)
    return main + _coupling_term(mu, s, params)


@dataclass(frozen=True)
class PartitionSum:
    Z: float
    last_shell: float
    cutoff: int


def partition_sum(params: ModelParams, cutoff: int = 12) -> PartitionSum:
    """Truncated partition function with the contribution of the last shell."""
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    shells = []
    for n in range(cutoff + 1):
        logs = [log_weight(mu, params) for mu in enumerate_partitions(n)]
        worst = max(logs)
        if worst > OVERFLOW_LOG:
            raise WeightOverflowError(f"log-weight {worst:.3g} at |mu| = {n} exceeds {OVERFLOW_LOG}")
        shells.append(math.fsum(math.exp(v) for v in logs))
    return PartitionSum(math.fsum(shells), shells[-1], cutoff)


def partition_function(params: ModelParams, cutoff: int = 12) -> float:
    return partition_sum(params, cutoff).Z


@dataclass(frozen=True)
class KernelTable:
    theory: Theory
    values: np.ndarray
    params: ModelParams

    def __call__(self, x: int) -> float:
        return float(self.values[abs(x)])


def _kernel_rhs(params: ModelParams, x: np.ndarray) -> np.ndarray:
    if params.theory is Theory.FOUR_D:
        return np.log(params.hbar * x / params.lambda0)
    q = params.q
    _check_q(q)
    return -math.log(params.Q) / 2 - x * math.log(q) / 2 + np.log1p(-(q**x))


def kernel_table(params: ModelParams, x_max: int) -> KernelTable:
    """Solve ``g(x+1) = f(x) + 2 g(x) - g(x-1)`` with ``g(0) = g(1) = 0``."""
    if x_max < 2:
        raise ValueError("x_max must be at least 2")
    f = _kernel_rhs(params, np.arange(1, x_max, dtype=float))
    g = np.zeros(x_max + 1)
    for x in range(1, x_max):
        g[x + 1] = f[x - 1] + 2 * g[x] - g[x - 1]
    return KernelTable(params.theory, g, params)


def _quadratic_form(mu: Partition, params: ModelParams) -> float:
    d = maya_delta(mu)
    pts = np.array(d.support_points)
    vals = np.array(d.values, dtype=float)
    span = int(pts.max() - pts.min()) if len(pts) else 0
    table = kernel_table(params, max(span, 2))
    dist = np.abs(pts[:, None] - pts[None, :])
    return float(vals @ table.values[dist] @ vals)


def _cubic_term(mu: Partition, params: ModelParams) -> float:
    """``-(log q / 6) sum (x - s)^3 Delta rho(x)``, present only in 5D."""
    if params.theory is Theory.FOUR_D:
        return 0.0
    d = maya_delta(mu)
    return -math.log(params.q) / 6 * sum((x - mu.charge) ** 3 * v for x, v in d.items())


def hook_energy(mu: Partition, params: ModelParams) -> float:
    """Minus the log of the hook-product part of the weight."""
    hooks = hook_lengths(mu)
    if params.theory is Theory.FOUR_D:
        return 2 * sum(math.log(params.hbar * h / params.lambda0) for h in hooks)
    return -2 * log_schur_q_rho(mu, params.q) - mu.size() * math.log(params.Q)


def quadratic_energy_check(mu: Partition, s: int, params: ModelParams) -> float:
    """Residual between the hook-product energy and the kernel quadratic form."""
    charged = mu.with_charge(s)
    rhs = _quadratic_form(charged, params) + _cubic_term(charged, params)
    return abs(hook_energy(charged, params) - rhs)


def energy_discrete(mu: Partition, s: int, params: ModelParams) -> float:
    charged = mu.with_charge(s)
    d = maya_delta(charged)
    energy = _quadratic_form(charged, params) + _cubic_term(charged, params)
    for k, tk in enumerate(params.t, start=1):
        if tk == 0:
            continue
        if params.theory is Theory.FOUR_D:
            energy += tk * sum((params.hbar * x) ** (k + 1) / (k + 1) * v for x, v in d.items())
        else:
            qk = params.q**k
            energy -= tk * qk / (1 - qk) * sum(params.q ** (k * x) * v for x, v in d.items())
    return energy


def log_prefactor(s: int, params: ModelParams) -> float:
    """Log of the charge- and coupling-dependent prefactor of the energy route."""
    if params.theory is Theory.FOUR_D:
        return s * (s + 1) * math.log(params.lambda0)
    q = params.q
    const = sum(tk * q**k / (1 - q**k) for k, tk in enumerate(params.t, start=1))
    return const + s * (s + 1) / 2 * math.log(params.Q)


def partition_function_energy(params: ModelParams, cutoff: int = 12) -> float:
    """Truncated partition function assembled from ``exp(-energy)``."""
    s = _charge(params, None)
    terms = [
        -energy_discrete(mu, s, params)
        for n in range(cutoff + 1)
        for mu in enumerate_partitions(n)
    ]
    return math.exp(log_prefactor(s, params)) * math.fsum(math.exp(v) for v in terms)
