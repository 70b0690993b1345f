"""Laurent series in ``p`` and the dispersionless Toda checks.

The reduced Lax function is ``L = a p + b + a/p``.  Its powers, split into
positive, negative and constant parts, reproduce the expansion data of the
curve: evaluated at ``p = y(z)`` the odd part of ``L^k`` is a polynomial times
``sqrt(P)``, and the constant and ``p^{-1}`` coefficients are the ``c_k``.

Coefficients may be floats, complex numbers or ``Fraction`` objects; in the
last case every operation is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve import CurveData, c_coeffs, equations_5d, n_eval, solve_curve, sqrt_P, log_y, y_of_z
from .limitshape import w_eval
from .model import Theory


class WindowError(ValueError):
    """A requested power lies outside the stored window."""


@dataclass(frozen=True)
class LaurentSeries:
    """``sum_j coeffs[j] p^(lo + j)``; zero tails are trimmed."""

    lo: int
    coeffs: tuple

    def __post_init__(self) -> None:
        coeffs = list(self.coeffs)
        lo = self.lo
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        while coeffs and coeffs[0] == 0:
            coeffs.pop(0)
            lo += 1
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "lo", lo if coeffs else 0)

    @classmethod
    def from_dict(cls, terms: dict[int, object]) -> "LaurentSeries":
        if not terms:
            return cls(0, ())
        lo, hi = min(terms), max(terms)
        zero = 0 * next(iter(terms.values()))
        return cls(lo, tuple(terms.get(m, zero) for m in range(lo, hi + 1)))

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, m: int):
        if self.lo <= m <= self.hi:
            return self.coeffs[m - self.lo]
        return 0

    def terms(self) -> dict[int, object]:
        return {self.lo + j: c for j, c in enumerate(self.coeffs)}

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        out = self.terms()
        for m, c in other.terms().items():
            out[m] = out.get(m, 0) + c
        return LaurentSeries.from_dict(out)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.lo, tuple(-c for c in self.coeffs))

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def scale(self, factor) -> "LaurentSeries":
        return LaurentSeries(self.lo, tuple(factor * c for c in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        if self.is_zero() or other.is_zero():
            return LaurentSeries(0, ())
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return LaurentSeries(self.lo + other.lo, tuple(out))

    __rmul__ = scale

    def __pow__(self, k: int) -> "LaurentSeries":
        if k < 0:
            raise ValueError("only nonnegative powers are supported")
        result = LaurentSeries(0, (self.coeffs[0] * 0 + 1 if self.coeffs else 1,))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def proj(self, which: str | int, window: tuple[int, int] | None = None):
        """Truncation: ``"pos"`` (powers > 0), ``"neg"`` (< 0) or a single power ``m``.

        With ``window = (lo, hi)`` a request outside the window raises
        :class:`WindowError`.
        """
        if isinstance(which, int):
            if window is not None and not window[0] <= which <= window[1]:
                raise WindowError(f"power {which} outside window {window}")
            return self.coeff(which)
        if which == "pos":
            return LaurentSeries.from_dict({m: c for m, c in self.terms().items() if m > 0})
        if which == "neg":
            return LaurentSeries.from_dict({m: c for m, c in self.terms().items() if m < 0})
        raise ValueError(f"unknown projection {which!r}")

    def derivative(self) -> "LaurentSeries":
        """``d/dp``."""
        return LaurentSeries.from_dict({m - 1: m * c for m, c in self.terms().items() if m != 0})

    def __call__(self, p):
        p = np.asarray(p, dtype=complex)
        out = np.zeros_like(p)
        for m, c in self.terms().items():
            out = out + complex(c) * p**m
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class LaxData:
    a: object
    b: object

    def series(self) -> LaurentSeries:
        return LaurentSeries(-1, (self.a, self.b, self.a))


def lax_from_curve(curve: CurveData) -> LaxData:
    """``a = Lambda, b = beta`` in 4D; ``a = R Lambda, b = -beta`` in 5D."""
    if curve.theory is Theory.FOUR_D:
        return LaxData(curve.lam, curve.beta)
    return LaxData(curve.R * curve.lam, -curve.beta)


def oddpart(series: LaurentSeries) -> LaurentSeries:
    return series.proj("pos") - series.proj("neg")


def lax_power_parts(lax: LaxData, k: int):
    """``((L^k)_{>0} - (L^k)_{<0}, (L^k)_0, (L^k)_{-1})``."""
    if k < 1:
        raise ValueError("k must be positive")
    power = lax.series() ** k
    return oddpart(power), power.coeff(0), power.coeff(-1)


def m_frak_series(lax: LaxData, t: Sequence[float], theory, R: float = 1.0) -> LaurentSeries:
    """Reduced Orlov-Schulman function built from the couplings."""
    theory = Theory(theory)
    out = LaurentSeries(0, ())
    L = lax.series()
    for k, tk in enumerate(t, start=1):
        if tk == 0:
            continue
        if theory is Theory.FOUR_D:
            if k >= 2:
                out = out + oddpart(L ** (k - 1)).scale(k * tk / 2)
        else:
            out = out - oddpart(L**k).scale((-1) ** k * R * k * tk / 2)
    return out


def oddpart_at_curve_residual(curve: CurveData, k: int, z) -> np.ndarray:
    """Relative mismatch of ``oddpart(L^k)(y(z))`` against ``(w^{k-1} + ... + c_{k-1}) sqrt(P)``.

    ``w`` is the curve variable.  In 5D the Laurent polynomial is the one of
    ``Z(y) = -L`` (``a = -R Lambda``, ``b = beta``).
    """
    z = np.asarray(z, dtype=complex)
    if curve.theory is Theory.FOUR_D:
        lax = LaxData(curve.lam, curve.beta)
    else:
        lax = LaxData(-curve.R * curve.lam, curve.beta)
    w = curve.w(z)
    lhs = oddpart(lax.series() ** k)(y_of_z(z, curve))
    c = c_coeffs(curve.beta, curve.lam_eff, k)
    poly = sum(c[j] * w ** (k - 1 - j) for j in range(k))
    rhs = poly * sqrt_P(z, curve)
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))


@dataclass
class IdentificationReport:
    eq1_residual: float
    eq2_residual: float
    eq2_status: str
    m_vs_n_sqrt_p: float
    w_to_m_residual: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sample_points(curve: CurveData, n: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    center = (curve.u0 + curve.u1) / 2
    half = (curve.u1 - curve.u0) / 2
    im_scale = 1.0 if curve.theory is Theory.FOUR_D else 0.9 * math.pi / curve.R
    im = rng.uniform(0.1, 1.0, n) * im_scale * rng.choice([-1, 1], n)
    return center + half * rng.uniform(-1.5, 1.5, n) + 1j * im


def verify_identification(curve: CurveData, n_points: int = 20) -> IdentificationReport:
    """Residuals of the reduced string equations and of the ``W``-to-``M`` relation."""
    lax = lax_from_curve(curve)
    a, b, s, t = lax.a, lax.b, curve.s, curve.t
    L = lax.series()
    if curve.theory is Theory.FOUR_D:
        eq1 = math.log(a / curve.lambda0)
        eq2 = (s - b) / a
        for k, tk in enumerate(t, start=1):
            power = L ** (k - 1)
            eq1 -= k * tk / 2 * power.coeff(0)
            eq2 += k * tk * power.coeff(-1)
        status = "string equation"
    else:
        R = curve.R
        eq1 = R * s + math.log(a / (R * curve.lambda0))
        for k, tk in enumerate(t, start=1):
            eq1 += (-1) ** k * R * k * tk * (L**k).coeff(0) / 2
        eq2 = float(equations_5d(curve.beta, curve.lam, s, t, curve.lambda0, R)[1])
        status = "imposed by hand"
    z = _sample_points(curve, n_points)
    m_at_y = m_frak_series(lax, t, curve.theory, curve.R)(y_of_z(z, curve))
    n_sqrt_p = n_eval(z, curve) * sqrt_P(z, curve)
    lhs = w_eval(z, curve) + log_y(z, curve) + curve.potential.dV(z) / 2
    if curve.theory is Theory.FIVE_D:
        lhs = lhs + curve.R * (z - curve.s) / 2
    return IdentificationReport(
        abs(eq1), abs(eq2), status,
        float(np.max(np.abs(m_at_y - n_sqrt_p))),
        float(np.max(np.abs(lhs - m_at_y))),
    )


def poisson_bracket(F: LaurentSeries, F_s: LaurentSeries, G: LaurentSeries, G_s: LaurentSeries,
                    p) -> np.ndarray:
    """``{F, G} = p (F_p G_s - F_s G_p)`` evaluated at ``p``."""
    return p * (F.derivative()(p) * G_s(p) - F_s(p) * G.derivative()(p))


def _flow_generator(lax: LaxData, k: int, theory: Theory) -> LaurentSeries:
    half = oddpart(lax.series() ** k).scale(0.5)
    return half.scale((-1) ** k) if theory is Theory.FIVE_D else half


def lax_flow_residual(k: int, s: float, t: Sequence[float], lambda0: float, theory="4D",
                      R: float = 1.0, delta: float = 1e-5, n_p: int = 64) -> float:
    """Finite-difference check of ``dL/dt_k = {A_k, L}`` on the unit circle.

    In 5D the generator carries the sign ``(-1)^k``.
    """
    theory = Theory(theory)
    t = list(t) + [0.0] * max(0, k - len(t))

    def lax_at(s_val, t_val):
        return lax_from_curve(solve_curve(theory, s_val, t_val, lambda0, R))

    def bumped(sign):
        tv = list(t)
        tv[k - 1] += sign * delta
        return lax_at(s, tv)

    base = lax_at(s, t)
    tp, tm = bumped(+1), bumped(-1)
    sp, sm = lax_at(s + delta, t), lax_at(s - delta, t)
    p = np.exp(2j * math.pi * np.arange(n_p) / n_p)
    dL_dt = (tp.series() - tm.series()).scale(1 / (2 * delta))(p)
    A = _flow_generator(base, k, theory)
    A_s = (_flow_generator(sp, k, theory) - _flow_generator(sm, k, theory)).scale(1 / (2 * delta))
    L_s = (sp.series() - sm.series()).scale(1 / (2 * delta))
    bracket = poisson_bracket(A, A_s, base.series(), L_s, p)
    return float(np.max(np.abs(dL_dt - bracket)))


def twist_map(z, w, a0):
    """Solve ``zb = 1/z`` and ``w/z - log(z/a0) = -zb wb + log(1/(zb a0))`` for ``(zb, wb)``."""
    zb = 1 / z
    wb = (np.log(1 / (zb * a0)) + np.log(z / a0) - w / z) / zb
    return zb, wb


def symplectic_check(z: complex, w: complex, a0: float, h: float = 1e-6) -> float:
    """``|det J * z / zb - 1|`` for the Jacobian of :func:`twist_map`."""
    z, w = complex(z), complex(w)
    if z == 0:
        raise ValueError("z must be nonzero")
    dz = [(np.array(twist_map(z + h, w, a0)) - np.array(twist_map(z - h, w, a0))) / (2 * h)]
    dw = [(np.array(twist_map(z, w + h, a0)) - np.array(twist_map(z, w - h, a0))) / (2 * h)]
    jac = np.column_stack([dz[0], dw[0]])
    det = np.linalg.det(jac)
    if det == 0:
        raise ValueError("singular Jacobian")
    zb, _ = twist_map(z, w, a0)
    return float(abs(det * z / zb - 1))
