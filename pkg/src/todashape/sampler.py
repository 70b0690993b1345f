"""Poissonized Plancherel sampling through the RSK shape.

A uniform permutation of ``n`` letters has an RSK shape distributed by the
Plancherel measure ``(dim mu)^2 / n!``.  Drawing ``n`` from a Poisson law with
mean ``xi = (Lambda0/hbar)^2`` gives the 4D weight at ``t = 0``.  Only the shape
is needed, so rows are kept as sorted arrays and each insertion bumps by
binary search.
"""
from __future__ import annotations

import bisect
import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .partitions import Partition

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without the optional extra
    numba = None


def rsk_shape_reference(values: Sequence[float]) -> Partition:
    """Row insertion with Python lists; the plain reference implementation."""
    rows: list[list[float]] = []
    for x in values:
        for row in rows:
            pos = bisect.bisect_right(row, x)
            if pos == len(row):
                row.append(x)
                break
            row[pos], x = x, row[pos]
        else:
            rows.append([x])
    return Partition(tuple(len(r) for r in rows))


def _rsk_rows_py(values: np.ndarray) -> np.ndarray:
    """Row lengths by sweeping the whole sequence through one row at a time.

    The letters bumped out of row ``r`` form, in order, the sequence inserted
    into row ``r + 1``; so each row is a patience-sorting pass over the bumped
    letters of the row above it.
    """
    lengths = np.zeros(values.size + 1, dtype=np.int64)
    current = values.copy()
    n_rows = 0
    while current.size:
        row = np.empty(current.size, dtype=current.dtype)
        bumped = np.empty(current.size, dtype=current.dtype)
        length = 0
        n_bumped = 0
        for x in current:
            lo, hi = 0, length
            while lo < hi:
                mid = (lo + hi) // 2
                if row[mid] > x:
                    hi = mid
                else:
                    lo = mid + 1
            if lo == length:
                row[length] = x
                length += 1
            else:
                bumped[n_bumped] = row[lo]
                n_bumped += 1
                row[lo] = x
        lengths[n_rows] = length
        n_rows += 1
        current = bumped[:n_bumped].copy()
    return lengths[:n_rows]


_rsk_rows_fast = numba.njit(cache=True, nogil=True)(_rsk_rows_py) if numba is not None else None


def rsk_shape(values: Sequence[float]) -> Partition:
    """Shape of the RSK insertion tableau of a sequence of distinct values."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return Partition(())
    if _rsk_rows_fast is None or arr.size < 64:
        return rsk_shape_reference(arr.tolist())
    return Partition(tuple(int(v) for v in _rsk_rows_fast(arr)))


def sample_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Independent stream for sample ``index`` of a batch started from ``seed``."""
    return np.random.SeedSequence((seed, index))


def thread_count() -> int:
    env = os.environ.get("TODASHAPE_THREADS")
    if env:
        value = int(env)
        if value < 1:
            raise ValueError("TODASHAPE_THREADS must be a positive integer")
        return value
    return os.cpu_count() or 1


def sample_one(xi: float, seed: int, index: int) -> Partition:
    rng = np.random.default_rng(sample_seed(seed, index))
    n = int(rng.poisson(xi))
    return rsk_shape(rng.permutation(n).astype(float))


@dataclass(frozen=True)
class SampleBatch:
    xi: float
    seed: int
    shapes: tuple[Partition, ...]
    hbar: float

    @property
    def seeds(self) -> list[tuple[int, int]]:
        """The ``(seed, index)`` pair that regenerates each sample."""
        return [(self.seed, i) for i in range(len(self.shapes))]


def sample_batch(xi: float, n_samples: int, seed: int, lambda0: float = 1.0,
                 threads: int | None = None) -> SampleBatch:
    """``n_samples`` Poissonized Plancherel shapes with intensity ``xi``.

    The result depends only on ``(xi, n_samples, seed)``, never on the thread count.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    threads = threads or thread_count()
    if threads == 1 or n_samples < 2:
        shapes = [sample_one(xi, seed, i) for i in range(n_samples)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shapes = list(pool.map(lambda i: sample_one(xi, seed, i), range(n_samples)))
    return SampleBatch(xi, seed, tuple(shapes), lambda0 / math.sqrt(xi))


@dataclass(frozen=True)
class StepProfile:
    """Right-continuous 0/1 density ``u -> rho(u / hbar)`` of one charged partition.

    Site ``x`` is occupied when ``x = mu_i - i + s`` for some row ``i`` (rows
    beyond the length of ``mu`` have ``mu_i = 0``).  The value on
    ``[hbar x, hbar (x + 1))`` is the occupation of site ``x``.
    """

    parts: tuple[int, ...]
    hbar: float
    s: int

    def occupied(self, x) -> np.ndarray:
        shape = np.shape(x)
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        rows = len(self.parts)
        out = x < self.s - rows
        sites = np.array([p - i + self.s for i, p in enumerate(self.parts, start=1)], dtype=np.int64)
        band = ~out
        if band.any() and sites.size:
            out[band] = np.isin(x[band], sites)
        return out.reshape(shape)

    def __call__(self, u) -> np.ndarray:
        x = np.floor(np.asarray(u, dtype=float) / self.hbar).astype(np.int64)
        return self.occupied(x).astype(float)

    def cumulative(self, u) -> np.ndarray:
        """``int_{u_ref}^{u} rho du'`` with ``u_ref = hbar (s - rows)``; exact for a step function."""
        u = np.asarray(u, dtype=float)
        rows = len(self.parts)
        base = self.s - rows
        sites = np.sort(np.array([p - i + self.s for i, p in enumerate(self.parts, start=1)], dtype=float))
        t = u / self.hbar - base
        # before the band every site is full, inside it only listed sites count
        full = np.minimum(t, 0.0)
        rel = sites - base
        covered = np.clip(t[..., None] - rel, 0.0, 1.0).sum(axis=-1) if rel.size else np.zeros_like(t)
        return self.hbar * (full + covered)


def empirical_density(mu: Partition, hbar: float, s: int = 0) -> StepProfile:
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    return StepProfile(tuple(mu.parts), hbar, int(s))


def bin_average(profile, edges: np.ndarray) -> np.ndarray:
    """Mean of a step profile on each bin ``[edges[j], edges[j+1])``."""
    c = profile.cumulative(edges)
    return np.diff(c) / np.diff(edges)


def arcsine_cumulative(u, s: float = 0.0, lambda0: float = 1.0) -> np.ndarray:
    """``int rho*`` for the arc-sine profile, with the same base point convention up to a constant."""
    v = np.clip((np.asarray(u, dtype=float) - s) / (2 * lambda0), -1.0, 1.0)
    # antiderivative of arccos(v)/pi in u, continuous across the support
    inside = 2 * lambda0 * (v * np.arccos(v) - np.sqrt(1 - v * v)) / math.pi
    left = np.minimum(np.asarray(u, dtype=float) - (s - 2 * lambda0), 0.0)
    return inside + left


class _ArcsineProfile:
    def __init__(self, s: float, lambda0: float):
        self.s, self.lambda0 = s, lambda0

    def cumulative(self, u):
        return arcsine_cumulative(u, self.s, self.lambda0)


@dataclass(frozen=True)
class LimitShapeComparison:
    mean_sup_dist: float
    mean_l2_dist: float
    batch_sup_dist: float
    per_sample_sup: tuple[float, ...]


def _l2(diff: np.ndarray, edges: np.ndarray) -> float:
    return float(math.sqrt(np.sum(diff**2 * np.diff(edges))))


def compare_limit_shape(batch: SampleBatch, reference, edges: np.ndarray, s: int = 0) -> LimitShapeComparison:
    """Distances between bin-averaged empirical profiles and the reference.

    ``reference`` needs a ``cumulative`` method.  ``batch_sup_dist`` compares
    the batch-averaged profile with the reference; the ``mean_*`` fields
    average the per-sample distances.
    """
    ref = bin_average(reference, edges)
    profiles = [bin_average(empirical_density(mu, batch.hbar, s), edges) for mu in batch.shapes]
    if not profiles:
        return LimitShapeComparison(0.0, 0.0, 0.0, ())
    sups = [float(np.max(np.abs(p - ref))) for p in profiles]
    l2s = [_l2(p - ref, edges) for p in profiles]
    averaged = np.mean(profiles, axis=0)
    return LimitShapeComparison(
        float(np.mean(sups)), float(np.mean(l2s)), float(np.max(np.abs(averaged - ref))), tuple(sups)
    )


def arcsine_comparison(batch: SampleBatch, lambda0: float = 1.0, s: int = 0,
                       bin_width: float | None = None) -> LimitShapeComparison:
    """Compare with the arc-sine law on bins spanning ``[s - 2.5 Lambda0, s + 2.5 Lambda0]``.

    The default bin width is ten lattice sites, ``10 hbar``.
    """
    width = bin_width or 10 * batch.hbar
    lo, hi = s * batch.hbar - 2.5 * lambda0, s * batch.hbar + 2.5 * lambda0
    n_bins = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n_bins + 1)
    return compare_limit_shape(batch, _ArcsineProfile(s * batch.hbar, lambda0), edges, s)


def batch_summary_csv(batch: SampleBatch, comparison: LimitShapeComparison) -> str:
    """CSV with one row per sample: index, size, number of rows, sup distance."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_index", "n", "rows", "sup_dist"])
    for i, (mu, d) in enumerate(zip(batch.shapes, comparison.per_sample_sup)):
        writer.writerow([i, mu.size(), len(mu.parts), format(d, ".17g")])
    return buf.getvalue()
