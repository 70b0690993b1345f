"""The resolvent ``W(z)``, the limit-shape density and the Riemann-Hilbert checks.

``W`` is built from the solved curve.  In 4D

    W = -log y + N sqrt(P) - V'/2,

and in 5D the extra linear piece ``-R (z - s)/2`` is added.  The density is
``rho(u) = -Im W(u + i0) / pi``.  Points on the real axis are evaluated with
exact one-sided formulas selected by ``side`` (``+1`` for ``u + i0``).

Integrals over the cut use the angle ``theta`` of ``w = beta + 2 lam cos(theta)``
in the curve variable.  The square-root endpoint behaviour then disappears
from the integrands and Gauss-Legendre converges spectrally.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import CurveData, log_y, n_eval, sqrt_P
from .model import Theory

ASYMPTOTIC_RADIUS = 1e3
# exp(R * 25) keeps Z representable and the polynomial cancellation in W small
LEFT_REACH_5D = 25.0


class AdmissibilityViolation(ValueError):
    """The one-cut density leaves ``[0, 1]`` or stops decreasing."""

    def __init__(self, message: str, u: float, rho: float):
        super().__init__(f"{message} at u={u:.6g} (rho={rho:.6g})")
        self.u = u
        self.rho = rho


def w_eval(z, curve: CurveData, side: int = 0):
    """Resolvent ``W(z)``; real ``z`` on the cut or on ``u < u0`` needs ``side``."""
    z_arr = np.asarray(z, dtype=complex)
    pot = curve.potential
    out = -np.asarray(log_y(z_arr, curve, side)) + n_eval(z_arr, curve) * sqrt_P(z_arr, curve, side)
    out = out - pot.dV(z_arr) / 2
    if curve.theory is Theory.FIVE_D:
        out = out - curve.R * (z_arr - curve.s) / 2
    return out[()] if np.ndim(z) == 0 else out


def w_prime(z, curve: CurveData, side: int = 0, root=None):
    """Analytic derivative ``dW/dz`` (same side conventions as :func:`w_eval`).

    ``root`` may supply ``sqrt(P)`` at ``z`` when it is known more accurately
    than the curve variable allows, as near the branch points.
    """
    z_arr = np.asarray(z, dtype=complex)
    root = np.asarray(sqrt_P(z_arr, curve, side) if root is None else root, dtype=complex)
    pot = curve.potential
    n0 = n_eval(z_arr, curve)
    n1 = n_eval(z_arr, curve, derivative=1)
    if curve.theory is Theory.FOUR_D:
        out = -1 / root + n1 * root + n0 * (z_arr - curve.beta) / root
    else:
        Z = curve.w(z_arr)
        d_np_dZ = n1 * root + n0 * (Z - curve.beta) / root
        out = -curve.R / 2 + curve.R * Z / root - curve.R * Z * d_np_dZ
    out = out - pot.d2V(z_arr) / 2
    return out[()] if np.ndim(z) == 0 else out


def rho_star(u, curve: CurveData):
    """Limit-shape density: exactly 1 left of the cut and 0 right of it."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.where(u_arr < curve.u0, 1.0, 0.0)
    inside = (u_arr >= curve.u0) & (u_arr <= curve.u1)
    if inside.any():
        out[inside] = -np.imag(w_eval(u_arr[inside], curve, side=+1)) / math.pi
    return out.reshape(np.shape(u))[()]


@dataclass(frozen=True)
class CutNodes:
    """Quadrature data on the cut in the angle variable."""

    theta: np.ndarray
    weights: np.ndarray
    u: np.ndarray
    du_dtheta: np.ndarray  # absolute value of du/dtheta


def cut_map(curve: CurveData, theta):
    """Points ``u(theta)`` on the cut and ``|du/dtheta|``."""
    theta = np.asarray(theta, dtype=float)
    if curve.theory is Theory.FOUR_D:
        u = curve.beta + 2 * curve.lam * np.cos(theta)
        jac = 2 * curve.lam * np.sin(theta)
    else:
        Z = curve.beta + 2 * curve.R * curve.lam * np.cos(theta)
        u = -np.log(Z) / curve.R
        jac = 2 * curve.lam * np.sin(theta) / Z
    return u, np.abs(jac)


def cut_points(curve: CurveData, theta: np.ndarray) -> CutNodes:
    """Cut data at arbitrary angles, with unit weights."""
    u, jac = cut_map(curve, theta)
    return CutNodes(theta, np.ones_like(theta), u, jac)


def cut_nodes(curve: CurveData, n: int, a: float = 0.0, b: float = math.pi) -> CutNodes:
    """Gauss-Legendre nodes in the angle on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    theta = (b - a) / 2 * x + (a + b) / 2
    u, jac = cut_map(curve, theta)
    return CutNodes(theta, w * (b - a) / 2, u, jac)


def rho_prime_measure(curve: CurveData, nodes: CutNodes) -> np.ndarray:
    """``rho'(u) |du/dtheta|`` at the nodes; a smooth function of the angle.

    ``sqrt(P)`` on the upper lip is taken from the angle directly, so nodes
    within rounding of an endpoint stay finite.
    """
    half_width = 2 * curve.lam * (1 if curve.theory is Theory.FOUR_D else curve.R)
    lip = 1 if curve.theory is Theory.FOUR_D else -1
    root = lip * 1j * half_width * np.sin(nodes.theta)
    return -np.imag(w_prime(nodes.u, curve, side=+1, root=root)) / math.pi * nodes.du_dtheta


def integrate_against_rho_prime(f, curve: CurveData, n_quad: int = 200) -> float:
    """``int f(u) rho'(u) du`` over the cut."""
    nodes = cut_nodes(curve, n_quad)
    return float(np.sum(nodes.weights * f(nodes.u) * rho_prime_measure(curve, nodes)))


@dataclass(frozen=True)
class DensityProfile:
    u_grid: np.ndarray
    rho: np.ndarray
    u0: float
    u1: float
    theory: Theory

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "rho"])
        for u, r in zip(self.u_grid, self.rho):
            writer.writerow([format(float(u), ".17g"), format(float(r), ".17g")])
        return buf.getvalue()

    def __call__(self, u):
        return np.interp(u, self.u_grid, self.rho, left=1.0, right=0.0)


def check_admissible(u: np.ndarray, rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise if ``rho`` (sorted by ``u``) leaves ``[0, 1]`` or increases."""
    low, high = np.argmin(rho), np.argmax(rho)
    if rho[low] < -tol:
        raise AdmissibilityViolation("density below 0", u[low], rho[low])
    if rho[high] > 1 + tol:
        raise AdmissibilityViolation("density above 1", u[high], rho[high])
    rise = np.diff(rho)
    worst = int(np.argmax(rise)) if len(rise) else 0
    if len(rise) and rise[worst] > tol:
        raise AdmissibilityViolation("density increases", u[worst + 1], rho[worst + 1])


def density_profile(curve: CurveData, n_grid: int = 256, check: bool = True) -> DensityProfile:
    """Density on a cosine-spaced grid covering the closed cut."""
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    theta = np.linspace(0.0, math.pi, n_grid)
    u, _ = cut_map(curve, theta)
    order = np.argsort(u)
    u = u[order]
    u[0], u[-1] = curve.u0, curve.u1
    rho = np.empty_like(u)
    rho[1:-1] = rho_star(u[1:-1], curve)
    rho[0], rho[-1] = 1.0, 0.0
    if check:
        check_admissible(u, rho)
    return DensityProfile(u, rho, curve.u0, curve.u1, curve.theory)


def endpoint_exponent(curve: CurveData, deltas=(1e-4, 1e-5, 1e-6, 1e-7)) -> float:
    """Log-log slope of ``rho(u1 - delta)``; ``0.5`` for a square-root edge."""
    d = np.asarray(deltas)
    rho = rho_star(curve.u1 - d, curve)
    return float(np.polyfit(np.log(d), np.log(rho), 1)[0])


@dataclass
class RHReport:
    max_interior_residual: float
    max_jump_residual: float
    asymptotic_residuals: dict[str, float]
    periodicity_residual: float | None
    n_interior: int
    n_exterior: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def passes(self, interior: float = 1e-8, jump: float = 1e-8, asymptotic: float = 1e-4,
               periodicity: float = 1e-10) -> bool:
        ok = self.max_interior_residual <= interior and self.max_jump_residual <= jump
        ok = ok and all(v <= asymptotic for v in self.asymptotic_residuals.values())
        return ok and (self.periodicity_residual is None or self.periodicity_residual <= periodicity)


def _support_grid(curve: CurveData, theta: np.ndarray) -> np.ndarray:
    """Cosine-spaced points between the stored endpoints, in the curve variable."""
    if curve.theory is Theory.FOUR_D:
        a, b = curve.u0, curve.u1
        return (a + b) / 2 + (b - a) / 2 * np.cos(theta)
    a, b = math.exp(-curve.R * curve.u0), math.exp(-curve.R * curve.u1)
    return -np.log((a + b) / 2 + (b - a) / 2 * np.cos(theta)) / curve.R


def verify_rh(curve: CurveData, n_interior: int = 200, n_exterior: int = 50,
              radius: float = ASYMPTOTIC_RADIUS) -> RHReport:
    pot = curve.potential
    R, s = curve.R, curve.s
    five = curve.theory is Theory.FIVE_D

    # sum condition on the stored support [u0, u1], endpoints excluded; the
    # grid deliberately ignores beta so an inconsistent curve shows up here
    theta = math.pi * (np.arange(n_interior) + 0.5) / n_interior
    u = _support_grid(curve, theta)
    total = w_eval(u, curve, +1) + w_eval(u, curve, -1) + pot.dV(u)
    if five:
        total = total + R * (u - s)
    interior = float(np.max(np.abs(total)))

    # jump conditions off the cut on both sides
    width = curve.u1 - curve.u0
    offsets = width * np.linspace(0.01, 2.0, n_exterior)
    right, left = curve.u1 + offsets, curve.u0 - offsets
    jump_right = w_eval(right, curve, +1) - w_eval(right, curve, -1)
    jump_left = w_eval(left, curve, +1) - w_eval(left, curve, -1) + 2j * math.pi
    jump = float(max(np.max(np.abs(jump_right)), np.max(np.abs(jump_left))))

    asym: dict[str, float] = {}
    if not five:
        phi = np.linspace(-0.9 * math.pi, 0.9 * math.pi, 37)
        z = radius * np.exp(1j * phi)
        target = -np.log(z / curve.lambda0) + s / z
        asym["infinity"] = float(np.max(np.abs(w_eval(z, curve) - target)))
        periodicity = None
    else:
        im = np.array([-0.5, 0.5]) * math.pi / R
        z_right = radius + 1j * im
        target = -R * (z_right - s) / 2 + math.log(R * curve.lambda0)
        asym["right"] = float(np.max(np.abs(w_eval(z_right, curve) - target)))
        z_left = -min(radius, LEFT_REACH_5D / R) + 1j * im
        target = R * (z_left - s) / 2 - 1j * math.pi * np.sign(im) + math.log(R * curve.lambda0)
        asym["left"] = float(np.max(np.abs(w_eval(z_left, curve) - target)))
        rng = np.random.default_rng(0)
        zp = rng.uniform(curve.u0 - 2, curve.u1 + 2, 50) + 1j * rng.uniform(0.05, 0.95, 50) * math.pi / R
        shift = 2j * math.pi / R
        a = w_eval(zp, curve) + R * (zp - s) / 2
        b = w_eval(zp + shift, curve) + R * (zp + shift - s) / 2
        periodicity = float(np.max(np.abs(a - b)))
    return RHReport(interior, jump, asym, periodicity, n_interior, 2 * n_exterior)


def constraint_check(curve: CurveData, n_quad: int = 200) -> tuple[float, float]:
    """``(int rho' du, int u rho' du)``; should equal ``(-1, -s)``."""
    m0 = integrate_against_rho_prime(np.ones_like, curve, n_quad)
    m1 = integrate_against_rho_prime(lambda u: u, curve, n_quad)
    return m0, m1
