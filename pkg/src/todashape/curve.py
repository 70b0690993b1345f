"""The deformed Seiberg-Witten curve and its parameter equations.

In 4D the curve is ``y + 1/y = (z - beta)/Lambda`` and the square root
``sqrt(P)`` has its cut on ``[u0, u1] = [beta - 2 Lambda, beta + 2 Lambda]``.
In 5D everything is written in ``Z = exp(-R z)``: the curve is
``y + 1/y = (beta - Z)/(R Lambda)`` and the cut in ``Z`` is
``[beta - 2 R Lambda, beta + 2 R Lambda]``, which makes the ``2 pi i / R``
periodicity in ``z`` automatic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .model import Theory

NEWTON_MAX_ITER = 100
HOMOTOPY_STEPS = (0.25, 0.5, 0.75, 1.0)


class NonConvergenceError(RuntimeError):
    """Newton iteration for the curve parameters did not converge."""


class InvalidCutError(ValueError):
    """The curve parameters do not describe a real one-cut configuration."""


class OnCutError(ValueError):
    """A point on a branch cut was given without choosing a side."""


@dataclass(frozen=True)
class PotentialSpec:
    """External potential ``V(u) = sum t_k u^k`` (4D) or ``sum t_k exp(-R k u)`` (5D)."""

    theory: Theory
    t: tuple[float, ...] = ()
    R: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theory", Theory(self.theory))
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))

    def derivative(self, z, order: int = 1):
        """``d^order V / dz^order`` for ``order >= 0``."""
        z = np.asarray(z)
        out = np.zeros_like(z, dtype=complex if np.iscomplexobj(z) else float)
        for k, tk in enumerate(self.t, start=1):
            if tk == 0:
                continue
            if self.theory is Theory.FOUR_D:
                if order <= k:
                    out = out + tk * math.perm(k, order) * z ** (k - order)
            else:
                out = out + tk * (-self.R * k) ** order * np.exp(-self.R * k * z)
        return out

    def V(self, z):
        return self.derivative(z, 0)

    def dV(self, z):
        return self.derivative(z, 1)

    def d2V(self, z):
        return self.derivative(z, 2)


def c_coeffs(beta, lambda_eff, K: int) -> list:
    """Coefficients ``c_0..c_K`` of ``((z - beta)^2 - 4 lambda^2)^(-1/2) = sum c_k z^(-k-1)``.

    Uses ``n c_n = (2n - 1) beta c_{n-1} - (n - 1)(beta^2 - 4 lambda^2) c_{n-2}``,
    which follows from ``P S' + (z - beta) S = 0``.  Exact for ``Fraction`` inputs.
    """
    disc = beta * beta - 4 * lambda_eff * lambda_eff
    c = [beta * 0 + 1]
    if K >= 1:
        c.append(beta * c[0])
    for n in range(2, K + 1):
        c.append(((2 * n - 1) * beta * c[n - 1] - (n - 1) * disc * c[n - 2]) / n)
    return c[: K + 1]


def n_poly_4d(k: int, c: Sequence[float]) -> np.ndarray:
    """Ascending coefficients of ``N_k(z) = (k/2)(z^{k-2} + c_1 z^{k-3} + ... + c_{k-2})``."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return np.zeros(1)
    return np.array([k / 2 * c[k - 2 - j] for j in range(k - 1)], dtype=float)


def n_poly_5d(k: int, c: Sequence[float], R: float) -> np.ndarray:
    """Ascending coefficients in ``Z`` of ``N_k = -(R k/2)(Z^{k-1} + c_1 Z^{k-2} + ... + c_{k-1})``."""
    if k < 1:
        raise ValueError("k must be positive")
    return np.array([-R * k / 2 * c[k - 1 - j] for j in range(k)], dtype=float)


@dataclass(frozen=True)
class CurveData:
    theory: Theory
    beta: float
    lam: float
    R: float
    u0: float
    u1: float
    c: tuple[float, ...]
    s: float
    t: tuple[float, ...]
    lambda0: float
    iterations: int = field(default=0, compare=False)

    @property
    def potential(self) -> PotentialSpec:
        return PotentialSpec(self.theory, self.t, self.R)

    @property
    def lam_eff(self) -> float:
        return self.lam if self.theory is Theory.FOUR_D else self.R * self.lam

    @property
    def branch_points(self) -> tuple[float, float]:
        """Cut endpoints ``(w0, w1)`` in the variable in which ``P`` is quadratic."""
        if self.theory is Theory.FOUR_D:
            return self.beta - 2 * self.lam, self.beta + 2 * self.lam
        return self.beta - 2 * self.R * self.lam, self.beta + 2 * self.R * self.lam

    def w(self, z):
        """Map ``z`` to the curve variable (``z`` itself in 4D, ``exp(-R z)`` in 5D)."""
        if self.theory is Theory.FOUR_D:
            return z
        return np.exp(-self.R * np.asarray(z))

    def n_coeffs(self) -> np.ndarray:
        """Ascending coefficients of ``N = sum t_k N_k`` in the curve variable."""
        out = np.zeros(max(len(self.t), 1))
        for k, tk in enumerate(self.t, start=1):
            if tk == 0:
                continue
            if self.theory is Theory.FOUR_D:
                poly = n_poly_4d(k, self.c)
            else:
                poly = n_poly_5d(k, self.c, self.R)
            out[: len(poly)] += tk * poly
        return out

    def to_json(self) -> dict:
        return {
            "theory": self.theory.value,
            "beta": self.beta,
            "lambda": self.lam,
            "R": self.R,
            "u0": self.u0,
            "u1": self.u1,
            "c": list(self.c),
            "s": self.s,
            "t": list(self.t),
            "lambda0": self.lambda0,
        }


def make_curve(theory, beta: float, lam: float, s: float, t: Sequence[float], lambda0: float,
               R: float = 1.0, iterations: int = 0) -> CurveData:
    """Assemble a :class:`CurveData` from solved parameters."""
    theory = Theory(theory)
    t = tuple(float(v) for v in t)
    if not lam > 0:
        raise InvalidCutError(f"Lambda must be positive, got {lam}")
    if theory is Theory.FOUR_D:
        c = c_coeffs(beta, lam, len(t) + 1)
        u0, u1 = beta - 2 * lam, beta + 2 * lam
    else:
        if not beta - 2 * R * lam > 0:
            raise InvalidCutError(f"5D requires beta - 2 R Lambda > 0, got {beta - 2 * R * lam}")
        c = c_coeffs(beta, R * lam, len(t) + 1)
        u0 = -math.log(beta + 2 * R * lam) / R
        u1 = -math.log(beta - 2 * R * lam) / R
    return CurveData(theory, float(beta), float(lam), float(R), u0, u1, tuple(map(float, c)),
                     float(s), t, float(lambda0), iterations)


def _scalar_or_array(value: np.ndarray, like):
    return value.reshape(np.shape(like))[()]


def sqrt_P(z, curve: CurveData, side: int = 0):
    """Branch of ``sqrt(P)`` that grows like ``w - beta`` at infinity in the curve variable.

    Points with zero imaginary part are treated as lying on the real axis;
    inside the cut they need ``side = +1`` (``u + i0``) or ``side = -1``.
    """
    z_in = z
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w0, w1 = curve.branch_points
    w = curve.w(z)
    out = np.sqrt(w - w0) * np.sqrt(w - w1)
    real = z.imag == 0
    if real.any():
        wr = w[real].real
        root = np.sqrt(np.abs((wr - w0) * (wr - w1)))
        inside = (wr > w0) & (wr < w1)
        if inside.any() and side == 0:
            raise OnCutError("point on the cut needs a side flag")
        # z = u + i0 maps to Z approaching the cut from below in 5D
        cut_sign = side if curve.theory is Theory.FOUR_D else -side
        out[real] = np.where(inside, cut_sign * 1j * root, np.where(wr >= w1, root, -root))
    return _scalar_or_array(out, z_in)


def y_of_z(z, curve: CurveData, side: int = 0):
    root = np.asarray(sqrt_P(z, curve, side))
    if curve.theory is Theory.FOUR_D:
        y = (np.asarray(z, dtype=complex) - curve.beta + root) / (2 * curve.lam)
    else:
        y = (curve.beta - curve.w(np.asarray(z, dtype=complex)) - root) / (2 * curve.R * curve.lam)
    return _scalar_or_array(y, z)


def log_y(z, curve: CurveData, side: int = 0):
    """Principal ``log y``, with the real-axis jump line resolved by ``side``.

    ``y`` is a negative real number exactly on the real line left of the cut;
    there ``y(u + i0)`` sits just above the negative axis.
    """
    y = np.atleast_1d(np.asarray(y_of_z(z, curve, side), dtype=complex))
    out = np.log(y)
    negative = (np.atleast_1d(np.asarray(z, dtype=complex)).imag == 0) & (y.imag == 0) & (y.real < 0)
    if negative.any():
        if side == 0:
            raise OnCutError("point on the jump line of log y needs a side flag")
        out[negative] = np.log(-y.real[negative]) + 1j * side * math.pi
    return _scalar_or_array(out, z)


def curve_residual(z, curve: CurveData, side: int = 0):
    """``y + 1/y`` minus the right-hand side of the curve equation."""
    y = np.asarray(y_of_z(z, curve, side))
    z = np.asarray(z, dtype=complex)
    if curve.theory is Theory.FOUR_D:
        rhs = (z - curve.beta) / curve.lam
    else:
        rhs = (curve.beta - curve.w(z)) / (curve.R * curve.lam)
    return y + 1 / y - rhs


# ----------------------------------------------------------------------------
# parameter equations


def equations_4d(beta: float, lam: float, s: float, t: Sequence[float], lambda0: float) -> np.ndarray:
    c = c_coeffs(beta, lam, len(t) + 1)
    eq1 = math.log(lam / lambda0)
    eq2 = beta - s
    for k, tk in enumerate(t, start=1):
        eq1 -= k * tk * c[k - 1] / 2
        eq2 -= k * tk * (c[k] - beta * c[k - 1]) / 2
    return np.array([eq1, eq2])


def equations_5d(beta: float, lam: float, s: float, t: Sequence[float], lambda0: float, R: float) -> np.ndarray:
    lam_eff = R * lam
    disc = beta * beta - 4 * lam_eff * lam_eff
    if not (beta - 2 * lam_eff > 0 and disc > 0):
        raise InvalidCutError("beta - 2 R Lambda must stay positive")
    root = math.sqrt(disc)
    c = c_coeffs(beta, lam_eff, len(t) + 1)
    y_inf = (beta + root) / (2 * lam_eff)
    eq1 = R * s + math.log(lam / lambda0)
    eq2 = -math.log(y_inf) - math.log(R * lambda0)
    for k, tk in enumerate(t, start=1):
        eq1 += R * k * tk * c[k] / 2
        eq2 += R * k * tk * c[k - 1] / 2 * root
    return np.array([eq1, eq2])


def _newton(residual: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, tol: float,
            max_iter: int = NEWTON_MAX_ITER) -> tuple[np.ndarray, int]:
    """Damped Newton with a central-difference Jacobian.

    ``residual`` may raise :class:`InvalidCutError`, which the line search
    treats as an infinitely bad trial point.
    """

    def safe(x):
        try:
            with np.errstate(all="ignore"):
                r = residual(x)
        except (InvalidCutError, ValueError, OverflowError):
            return None
        return r if np.all(np.isfinite(r)) else None

    x = np.array(x0, dtype=float)
    r = safe(x)
    if r is None:
        raise InvalidCutError("starting point is not admissible")
    for it in range(max_iter + 1):
        norm = np.max(np.abs(r))
        if norm <= tol:
            return x, it
        if it == max_iter:
            break
        jac = np.empty((len(x), len(x)))
        for j in range(len(x)):
            h = 1e-7 * max(abs(x[j]), 1.0)
            e = np.zeros_like(x)
            e[j] = h
            rp, rm = safe(x + e), safe(x - e)
            if rp is None or rm is None:
                raise NonConvergenceError("finite-difference stencil left the admissible region")
            jac[:, j] = (rp - rm) / (2 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError("singular Jacobian") from exc
        lam = 1.0
        while lam > 1e-10:
            trial = safe(x + lam * step)
            if trial is not None and np.max(np.abs(trial)) < norm:
                break
            lam /= 2
        else:
            raise NonConvergenceError(f"line search failed at residual {norm:.3e}")
        x, r = x + lam * step, trial
    raise NonConvergenceError(f"no convergence in {max_iter} iterations (residual {np.max(np.abs(r)):.3e})")


def _solve(residual_at: Callable[[float, np.ndarray], np.ndarray], seed: np.ndarray,
           guess: np.ndarray | None, tol: float) -> tuple[np.ndarray, int]:
    start = seed if guess is None else np.asarray(guess, dtype=float)
    try:
        return _newton(lambda x: residual_at(1.0, x), start, tol)
    except (NonConvergenceError, InvalidCutError):
        pass
    x, total = seed, 0
    for gamma in HOMOTOPY_STEPS:
        x, its = _newton(lambda v, g=gamma: residual_at(g, v), x, tol)
        total += its
    return x, total


def solve_4d(s: float, t: Sequence[float], lambda0: float, tol: float = 1e-12,
             guess: tuple[float, float] | None = None) -> CurveData:
    """Solve the two 4D parameter equations for ``(beta, Lambda)``.

    The unknowns are ``(beta, log Lambda)``; ``guess`` is a ``(beta, Lambda)`` pair.
    """
    t = tuple(float(v) for v in t)

    def residual_at(gamma, x):
        return equations_4d(x[0], math.exp(x[1]), s, [gamma * v for v in t], lambda0)

    seed = np.array([float(s), math.log(lambda0)])
    g = None if guess is None else np.array([guess[0], math.log(guess[1])])
    x, its = _solve(residual_at, seed, g, tol)
    lam = lambda0 if x[1] == seed[1] else math.exp(x[1])
    return make_curve(Theory.FOUR_D, x[0], lam, s, t, lambda0, iterations=its)


def seed_5d(s: float, lambda0: float, R: float) -> tuple[float, float]:
    """Exact ``t = 0`` solution ``(beta, Lambda)`` of the 5D equations."""
    shrink = math.exp(-R * s)
    return (1 + (R * lambda0) ** 2) * shrink, lambda0 * shrink


def solve_5d(s: float, t: Sequence[float], lambda0: float, R: float, tol: float = 1e-12,
             guess: tuple[float, float] | None = None) -> CurveData:
    if not 0 < R * lambda0 < 1:
        raise InvalidCutError(f"5D requires 0 < R lambda0 < 1, got {R * lambda0}")
    t = tuple(float(v) for v in t)

    def residual_at(gamma, x):
        return equations_5d(x[0], math.exp(x[1]), s, [gamma * v for v in t], lambda0, R)

    beta0, lam0 = seed_5d(s, lambda0, R)
    seed = np.array([beta0, math.log(lam0)])
    g = None if guess is None else np.array([guess[0], math.log(guess[1])])
    x, its = _solve(residual_at, seed, g, tol)
    lam = lam0 if x[1] == seed[1] else math.exp(x[1])
    return make_curve(Theory.FIVE_D, x[0], lam, s, t, lambda0, R=R, iterations=its)


def solve_curve(theory, s: float, t: Sequence[float], lambda0: float, R: float = 1.0,
                tol: float = 1e-12, guess: tuple[float, float] | None = None) -> CurveData:
    if Theory(theory) is Theory.FOUR_D:
        return solve_4d(s, t, lambda0, tol, guess)
    return solve_5d(s, t, lambda0, R, tol, guess)


def n_eval(z, curve: CurveData, derivative: int = 0):
    """``N(z)`` (or its ``derivative``-th derivative in the curve variable)."""
    coeffs = curve.n_coeffs()
    for _ in range(derivative):
        coeffs = npoly.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)
    return npoly.polyval(curve.w(np.asarray(z, dtype=complex)), coeffs)
