"""Critical energy and its coupling derivatives.

The critical energy is the double integral of the kernel ``g0(|u - v|)``
against ``rho'(u) rho'(v)`` plus the linear potential terms.  Its derivative in
``t_k`` is computed three ways:

* the density route ``int f_k(u) rho'(u) du``,
* the contour route ``(1/2 pi i) oint f_k(z) W'(z) dz`` on an ellipse,
* a central finite difference of the energy itself,

where ``f_k(u) = u^{k+1}/(k+1)`` in 4D and ``exp(-R k u)/(-R k)`` in 5D.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import bernoulli, zeta

from .curve import CurveData, solve_curve
from .limitshape import cut_nodes, cut_points, rho_prime_measure, rho_star, w_eval, w_prime
from .model import Theory

# below this value of R*u the 5D kernel uses its Taylor series, above it the trilogarithm
_SERIES_SWITCH = 2.0
_SERIES_TERMS = 30
_TRILOG_TERMS = 60


class ContourError(ValueError):
    """The integration ellipse does not enclose the cut or reaches another copy of it."""


# ----------------------------------------------------------------------------
# kernels


def g0_4d(x, lambda0: float):
    """``x^2/2 (log(x/Lambda0) - 3/2)`` with its limit 0 at ``x = 0``."""
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * x / 2 * (np.log(x / lambda0) - 1.5)
    return np.where(x > 0, out, 0.0)


@lru_cache(maxsize=None)
def _series_coefficients() -> np.ndarray:
    """``B_{2m-2} / ((2m-2) (2m)!)`` for ``m = 2..``, the Taylor data of the 5D correction."""
    B = bernoulli(2 * _SERIES_TERMS + 2)
    return np.array([B[2 * m - 2] / ((2 * m - 2) * math.factorial(2 * m))
                     for m in range(2, _SERIES_TERMS + 2)])


def _trilog_exp(mu: np.ndarray) -> np.ndarray:
    """``Li_3(exp(-mu))`` for ``mu`` bounded away from 0."""
    k = np.arange(1, _TRILOG_TERMS + 1)
    return np.sum(np.exp(-np.outer(mu, k)) / k**3, axis=1)


def g0_5d(x, R: float, lambda0: float):
    """5D kernel with ``g'' = log(2 sinh(R x/2)/(R Lambda0))`` and ``g(0) = g'(0) = 0``.

    Integrating twice gives
    ``R x^3/12 - log(R Lambda0) x^2/2 - pi^2 x/(6R) + (zeta(3) - Li_3(e^{-R x}))/R^2``;
    near ``x = 0`` the equivalent expansion around the 4D kernel is used.
    """
    x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    mu = R * x
    out = np.empty_like(x)
    small = mu <= _SERIES_SWITCH
    if small.any():
        m2 = mu[small] ** 2
        powers = m2[:, None] ** np.arange(2, _SERIES_TERMS + 2)[None, :]
        out[small] = g0_4d(x[small], lambda0) + powers @ _series_coefficients() / R**2
    big = ~small
    if big.any():
        xb = x[big]
        out[big] = (R * xb**3 / 12 - math.log(R * lambda0) * xb**2 / 2 - math.pi**2 * xb / (6 * R)
                    + (zeta(3) - _trilog_exp(mu[big])) / R**2)
    return out


def kernel(curve: CurveData):
    if curve.theory is Theory.FOUR_D:
        return lambda x: g0_4d(x, curve.lambda0)
    return lambda x: g0_5d(x, curve.R, curve.lambda0)


def pairing_function(k: int, curve: CurveData, derivative: int = 0):
    """``f_k`` (or ``f_k'``) whose pairing with ``rho'`` is the ``t_k`` derivative."""
    if curve.theory is Theory.FOUR_D:
        if derivative == 0:
            return lambda z: z ** (k + 1) / (k + 1)
        return lambda z: z**k
    R = curve.R
    if derivative == 0:
        return lambda z: np.exp(-R * k * z) / (-R * k)
    return lambda z: np.exp(-R * k * z)


def linear_potential(curve: CurveData):
    """Integrand of the part of the energy that is linear in ``rho'``."""
    t, R, s = curve.t, curve.R, curve.s
    five = curve.theory is Theory.FIVE_D

    def f(u):
        total = R / 6 * (u - s) ** 3 if five else np.zeros_like(u)
        for k, tk in enumerate(t, start=1):
            if tk:
                total = total + tk * pairing_function(k, curve)(u)
        return total

    return f


# ----------------------------------------------------------------------------
# energy and the three derivative routes


def energy_critical(curve: CurveData, n_quad: int = 128) -> float:
    """Critical energy by split-panel Gauss-Legendre in the cut angle.

    The inner integral is split at the outer node so the ``x^2 log x`` kink of
    the kernel sits at a panel end.
    """
    g = kernel(curve)
    outer = cut_nodes(curve, n_quad)
    m_outer = rho_prime_measure(curve, outer)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    theta_i = outer.theta[:, None]
    # left panel [0, theta_i] and right panel [theta_i, pi]
    left = theta_i / 2 * (x[None, :] + 1)
    right = theta_i + (math.pi - theta_i) / 2 * (x[None, :] + 1)
    phi = np.concatenate([left, right], axis=1)
    wts = np.concatenate([theta_i / 2 * w[None, :], (math.pi - theta_i) / 2 * w[None, :]], axis=1)
    inner_nodes = cut_points(curve, phi.ravel())
    m_inner = rho_prime_measure(curve, inner_nodes).reshape(phi.shape)
    v = inner_nodes.u.reshape(phi.shape)
    inner = np.sum(wts * g(np.abs(outer.u[:, None] - v).ravel()).reshape(phi.shape) * m_inner, axis=1)
    quadratic = np.sum(outer.weights * m_outer * inner)
    linear = np.sum(outer.weights * linear_potential(curve)(outer.u) * m_outer)
    return float(quadratic + linear)


def dE_dtk_density(k: int, curve: CurveData, n_quad: int = 128) -> float:
    """``int f_k rho' du`` after integration by parts, using density values only.

    ``rho`` is 1 at ``u0`` and 0 at ``u1``, so the integral equals
    ``-f_k(u0) - int_{u0}^{u1} f_k'(u) rho(u) du``.
    """
    nodes = cut_nodes(curve, n_quad)
    rho = rho_star(nodes.u, curve)
    f, df = pairing_function(k, curve), pairing_function(k, curve, derivative=1)
    bulk = np.sum(nodes.weights * df(nodes.u) * rho * nodes.du_dtheta)
    return float(-f(curve.u0) - bulk)


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    semi_axes: tuple[float, float]
    n_nodes: int = 512

    def __post_init__(self) -> None:
        if self.n_nodes < 64:
            raise ContourError("n_nodes must be at least 64")

    def scaled(self, factor: float, max_ry: float | None = None) -> "ContourSpec":
        rx, ry = self.semi_axes
        ry = ry * factor if max_ry is None else min(ry * factor, max_ry)
        return ContourSpec(self.center, (rx * factor, ry), self.n_nodes)

    def nodes(self, phi: np.ndarray | None = None):
        """Points ``z(phi)`` and ``dz/dphi`` (equispaced ``phi`` by default)."""
        if phi is None:
            phi = 2 * math.pi * np.arange(self.n_nodes) / self.n_nodes
        rx, ry = self.semi_axes
        z = self.center + rx * np.cos(phi) + 1j * ry * np.sin(phi)
        dz = -rx * np.sin(phi) + 1j * ry * np.cos(phi)
        return z, dz


def _ry_cap(curve: CurveData) -> float | None:
    return None if curve.theory is Theory.FOUR_D else 0.95 * math.pi / curve.R


def default_contour(curve: CurveData, n_nodes: int = 512) -> ContourSpec:
    half = (curve.u1 - curve.u0) / 2
    ry = 1.0
    cap = _ry_cap(curve)
    if cap is not None:
        ry = min(ry, cap)
    return ContourSpec((curve.u0 + curve.u1) / 2, (1.5 * half + 0.5, ry), n_nodes)


def validate_contour(contour: ContourSpec, curve: CurveData) -> None:
    rx, ry = contour.semi_axes
    c = contour.center
    for u in (curve.u0, curve.u1):
        if ((u - c.real) / rx) ** 2 + (c.imag / ry) ** 2 >= 1:
            raise ContourError(f"contour does not enclose the cut endpoint {u}")
    cap = _ry_cap(curve)
    if cap is not None and abs(c.imag) + ry >= math.pi / curve.R:
        raise ContourError("contour reaches a periodic copy of the cut")


def contour_integral(integrand, contour: ContourSpec) -> complex:
    """``(1/2 pi i) oint integrand(z) dz`` by the periodic trapezoid rule."""
    z, dz = contour.nodes()
    return complex(np.mean(integrand(z) * dz) / 1j)


def dE_dtk_contour_complex(k: int, curve: CurveData, contour: ContourSpec | None = None) -> complex:
    contour = contour or default_contour(curve)
    validate_contour(contour, curve)
    f = pairing_function(k, curve)
    return contour_integral(lambda z: f(z) * w_prime(z, curve), contour)


def dE_dtk_contour(k: int, curve: CurveData, contour: ContourSpec | None = None) -> float:
    return dE_dtk_contour_complex(k, curve, contour).real


def _bump(t: Sequence[float], k: int, h: float) -> tuple[float, ...]:
    tv = list(t) + [0.0] * max(0, k - len(t))
    tv[k - 1] += h
    return tuple(tv)


def _resolve(curve: CurveData, t: Sequence[float]) -> CurveData:
    return solve_curve(curve.theory, curve.s, t, curve.lambda0, curve.R, guess=(curve.beta, curve.lam))


def dE_dtk_fd(k: int, curve: CurveData, step: float = 1e-4, n_quad: int = 128) -> float:
    """Central difference of :func:`energy_critical` in ``t_k`` at fixed charge."""
    plus = energy_critical(_resolve(curve, _bump(curve.t, k, step)), n_quad)
    minus = energy_critical(_resolve(curve, _bump(curve.t, k, -step)), n_quad)
    return (plus - minus) / (2 * step)


def hessian_symmetry(curve: CurveData, j: int, k: int, step: float = 1e-4,
                     contour: ContourSpec | None = None) -> float:
    """``|d_j (dE/dt_k) - d_k (dE/dt_j)|`` from central differences of the contour route."""
    if j == k:
        return 0.0

    def cross(a, b):
        plus = _resolve(curve, _bump(curve.t, a, step))
        minus = _resolve(curve, _bump(curve.t, a, -step))
        return (dE_dtk_contour(b, plus, contour) - dE_dtk_contour(b, minus, contour)) / (2 * step)

    return abs(cross(j, k) - cross(k, j))


# ----------------------------------------------------------------------------
# Seiberg-Witten differential


def sw_differential_sample(z, curve: CurveData, side: int = 0):
    """``S'(z) = 2 W + V'``, plus ``R (z - s)`` in 5D so that ``S'`` is odd across the cut."""
    z = np.asarray(z, dtype=complex)
    out = 2 * w_eval(z, curve, side) + curve.potential.dV(z)
    if curve.theory is Theory.FIVE_D:
        out = out + curve.R * (z - curve.s)
    return out


def sw_period_check(curve: CurveData, contour: ContourSpec | None = None,
                    n_gauss: int = 256) -> tuple[complex, complex]:
    """Both sides of ``(1/2 pi i) oint S' dz = -2 x_c - 2 (1/2 pi i) oint z W' dz``.

    ``W`` is taken on its principal branch, whose jump line ``u < u0`` the
    ellipse crosses at ``x_c``; the boundary term of the integration by parts
    is the monodromy ``-2 pi i`` of ``W`` times ``x_c``.  The left side is
    integrated with Gauss-Legendre in the angle starting at the crossing.
    """
    contour = contour or default_contour(curve)
    validate_contour(contour, curve)
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    z, dz = contour.nodes(math.pi * x)
    lhs = complex(np.sum(math.pi * w * sw_differential_sample(z, curve) * dz) / (2j * math.pi))
    x_c = contour.center.real - contour.semi_axes[0]
    rhs = -2 * x_c - 2 * contour_integral(lambda zz: zz * w_prime(zz, curve), contour)
    return lhs, rhs


def derivative_scale(k: int, curve: CurveData, n_quad: int = 128) -> float:
    """``int |f_k| |rho'| du``, the size of the terms that cancel in a vanishing derivative.

    Relative spreads are measured against the larger of this and the derivative
    itself, so a derivative that is zero by symmetry is still judged sensibly.
    """
    nodes = cut_nodes(curve, n_quad)
    f = pairing_function(k, curve)
    return float(np.sum(nodes.weights * np.abs(f(nodes.u) * rho_prime_measure(curve, nodes))))


@dataclass
class DerivativeReport:
    k: int
    density_route: float
    contour_route: float
    fd_route: float
    spreads: dict

    def to_json(self) -> dict:
        return dict(self.__dict__)


def derivative_report(k: int, curve: CurveData, contour: ContourSpec | None = None,
                      n_quad: int = 128, fd_step: float = 1e-4) -> DerivativeReport:
    contour = contour or default_contour(curve)
    density = dE_dtk_density(k, curve, n_quad)
    full = dE_dtk_contour_complex(k, curve, contour)
    fd = dE_dtk_fd(k, curve, fd_step, n_quad)
    radii = [dE_dtk_contour(k, curve, contour.scaled(f, _ry_cap(curve))) for f in (1.0, 1.15, 1.3)]
    scale = max(abs(full.real), derivative_scale(k, curve, n_quad))
    spreads = {
        "density_vs_contour": abs(density - full.real) / scale,
        "contour_vs_fd": abs(fd - full.real) / scale,
        "contour_radius": max(radii) - min(radii),
        "contour_imag": abs(full.imag),
    }
    return DerivativeReport(k, density, full.real, fd, spreads)
