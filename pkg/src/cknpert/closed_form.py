"""Explicit formulas: ground-state profiles, per-mode spectral levels, the
degeneracy curves and closed-form norms.

Cylinder coordinate convention throughout: ``t = ln r`` and

    u(r) = r^{-(N-2-2a)/2} v(ln r).

Two amplitude conventions exist for the ground state. The one returned by
default solves ``-v'' + LambdaTilde v - v^{p-1} = 0`` for every admissible
``lambda``. The alternative constant carries ``(N-2-2a) sqrt(LambdaFour)`` where
the ODE requires ``LambdaFour``; both agree exactly when ``lambda == 0`` and
the discrepancy is exposed through ``verbatim=True`` / :func:`amplitude_ratio`.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import beta as beta_fn

from .params import DerivedConstants, ParameterError

__all__ = [
    "GroundState",
    "HCurve",
    "QuadratureError",
    "A",
    "B",
    "amplitude",
    "amplitude_ratio",
    "bound_state_count",
    "d2phi1",
    "dphi1",
    "energy_f0",
    "h_curve",
    "h_derived",
    "h_printed",
    "log_cosh",
    "moment",
    "moment_exact",
    "norm_pb_p",
    "norm_pb_p_exact",
    "nu",
    "ode_residual",
    "phi1",
    "z1_direct",
]

_LOG2 = math.log(2.0)


class QuadratureError(RuntimeError):
    pass


def log_cosh(x):
    """log(cosh(x)) without overflow for large |x|."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2


def _m(dc: DerivedConstants) -> float:
    # power of sech in the profile, equals 2/(p-2)
    return (dc.N - 2.0 * dc.q) / (2.0 * dc.q)


def amplitude(dc: DerivedConstants, verbatim: bool = False) -> float:
    """Peak value phi1(0).

    ``verbatim=True`` returns the alternative constant, which only solves the
    profile ODE when lambda = 0.
    """
    N, q = dc.N, dc.q
    if verbatim:
        base = N * (N - 2 - 2 * dc.a) * math.sqrt(dc.LambdaFour) / (4 * (N - 2 * q))
    else:
        base = N * dc.LambdaFour / (4 * (N - 2 * q))
    return base ** (_m(dc) / 2)


def amplitude_ratio(dc: DerivedConstants) -> float:
    """alternative / ODE-consistent amplitude; 1 exactly iff lambda == 0."""
    return amplitude(dc, verbatim=True) / amplitude(dc)


def phi1(t, dc: DerivedConstants, verbatim: bool = False):
    """Ground-state cylinder profile C (cosh(gamma t))^{-(N-2q)/(2q)}."""
    t = np.asarray(t, dtype=float)
    out = np.exp(math.log(amplitude(dc, verbatim)) - _m(dc) * log_cosh(dc.gamma * t))
    return out if out.ndim else float(out)


def dphi1(t, dc: DerivedConstants):
    t = np.asarray(t, dtype=float)
    out = -_m(dc) * dc.gamma * np.tanh(dc.gamma * t) * phi1(t, dc)
    return out if np.ndim(out) else float(out)


def d2phi1(t, dc: DerivedConstants):
    t = np.asarray(t, dtype=float)
    m, g = _m(dc), dc.gamma
    th = np.tanh(g * t)
    sech2 = 1.0 - th * th
    out = m * g * g * (m * th * th - sech2) * phi1(t, dc)
    return out if np.ndim(out) else float(out)


def ode_residual(t, dc: DerivedConstants, scale: float = 1.0):
    """-v'' + LambdaTilde v - v^{p-1} for v = scale * phi1, analytic derivatives."""
    v = scale * np.asarray(phi1(t, dc))
    out = -scale * np.asarray(d2phi1(t, dc)) + dc.LambdaTilde * v - v ** (dc.p - 1)
    return out if np.ndim(out) else float(out)


def z1_direct(r, dc: DerivedConstants, verbatim: bool = False):
    """Radial ground state z_1(r) in the original variable, rational-power form.

    Evaluated independently of :func:`phi1`; the two are tied together only
    through ``z1(r) = r^{-(N-2-2a)/2} phi1(ln r)``.
    """
    N, q = dc.N, dc.q
    d = N - 2 - 2 * dc.a
    s = math.sqrt(dc.LambdaFour)
    m = _m(dc)
    if verbatim:
        coef = (N * d * s / (N - 2 * q)) ** (m / 2)
    else:
        coef = (N * dc.LambdaFour / (N - 2 * q)) ** (m / 2)
    e1 = (1 - s / d) * d * q / (N - 2 * q)
    e2 = 2 * q * s / (N - 2 * q)
    lr = np.log(np.asarray(r, dtype=float))
    out = coef * np.exp(-m * (e1 * lr + np.logaddexp(0.0, e2 * lr)))
    return out if np.ndim(out) else float(out)


class GroundState:
    """Dilation family member z_mu; its cylinder profile is phi1(t - ln mu)."""

    def __init__(self, dc: DerivedConstants, mu: float = 1.0):
        if not mu > 0:
            raise ValueError(f"mu must be positive, got {mu}")
        self.dc = dc
        self.mu = float(mu)
        self.shift = math.log(self.mu)

    def profile(self, t):
        return phi1(np.asarray(t) - self.shift, self.dc)

    def dprofile(self, t):
        return dphi1(np.asarray(t) - self.shift, self.dc)

    def dmu(self, t):
        """d/dmu of the cylinder profile."""
        return -np.asarray(self.dprofile(t)) / self.mu

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (-self.dc.weight_shift) * self.profile(np.log(r))


# --- spectral closed forms -------------------------------------------------


def A(i: int, dc: DerivedConstants) -> float:
    """Mode-i level lambda - ((N-2-2a)/2)^2 - i(N+i-2)."""
    return dc.lam - (dc.weight_shift) ** 2 - i * (dc.N + i - 2)


def B(j: int, dc: DerivedConstants) -> float:
    """Poschl-Teller level indexed by j, written in the (a, b, lambda) variables.

    Values with j >= N/(2q) are still returned; they are not bound states.
    """
    N, q = dc.N, dc.q
    return -dc.LambdaFour * q * q / (4 * (N - 2 * q) ** 2) * (N / q - 2 * j) ** 2


def bound_state_count(dc: DerivedConstants) -> int:
    """Number of integers j >= 0 with j < N/(2q) (strict)."""
    x = dc.N / (2 * dc.q)
    k = round(x)
    if abs(x - k) <= 1e-12 * max(1.0, x):
        return int(k)
    return int(math.ceil(x))


def nu(j: int, dc: DerivedConstants) -> float:
    """j-th negative eigenvalue of -d^2/ds^2 - beta sech^2(gamma s)."""
    if not 0 <= j < bound_state_count(dc):
        raise IndexError(f"j={j} outside 0 <= j < {bound_state_count(dc)}")
    g2 = dc.gamma**2
    return -(g2 / 4) * (-(1 + 2 * j) + math.sqrt(1 + 4 * dc.beta / g2)) ** 2


class HCurve(NamedTuple):
    derived: float
    printed: float


def _curve(j: int, a: float, lam: float, N: int, shift: int) -> float:
    if j < 1:
        raise ValueError("curve index j must be >= 1")
    if not a < (N - 2) / 2:
        raise ParameterError("a < (N−2)/2", f"a={a}")
    d = N - 2 - 2 * a
    four = d * d - 4 * lam
    if not four > 0:
        raise ParameterError("λ < ((N−2−2a)/2)²", f"lambda={lam}")
    return (N / 2) * (1 + 4 * j * (N + j - shift) / four) ** -0.5 - d / 2


def h_derived(j: int, a: float, lam: float, N: int) -> float:
    """b solving B(0) = A(j): the mode-j degeneracy curve."""
    return _curve(j, a, lam, N, 2)


def h_printed(j: int, a: float, lam: float, N: int) -> float:
    """Same curve with the factor 4j(N+j-1); kept for comparison only."""
    return _curve(j, a, lam, N, 1)


def h_curve(j: int, a: float, lam: float, N: int) -> HCurve:
    return HCurve(h_derived(j, a, lam, N), h_printed(j, a, lam, N))


# --- norms and energies ----------------------------------------------------

_TAIL = 16 * math.log(10.0)


def _half_width(dc: DerivedConstants, c: float = 0.0) -> float:
    # phi1^p e^{ct} ~ exp(-(N/q)gamma|t| + c t); need tail below 1e-16 of peak
    rate = dc.N / dc.q * dc.gamma - abs(c)
    if rate <= 0:
        raise QuadratureError(f"integrand does not decay (rate={rate})")
    return (_TAIL + dc.N / dc.q * _LOG2) / rate


def moment(dc: DerivedConstants, c: float = 0.0, h: float = 1e-2, max_points: int = 20_000_000) -> float:
    """omega * int e^{c t} phi1(t)^p dt by the trapezoidal rule.

    With c = 0 this is int |x|^{-bp} z_1^p dx; with c = 2 it is the second
    moment int |x|^2 |x|^{-bp} z_1^p dx.
    """
    L = _half_width(dc, c)
    n = int(math.ceil(2 * L / h))
    if n > max_points:
        raise QuadratureError(f"{n} nodes needed for L={L:.3g}, h={h}")
    t = np.linspace(-L, L, n + 1)
    f = np.exp(c * t + dc.p * np.log(phi1(t, dc)))
    return dc.omega * float(np.trapezoid(f, t))


def moment_exact(dc: DerivedConstants, c: float = 0.0) -> float:
    """Beta-function value of :func:`moment`."""
    k = dc.N / dc.q  # p * (N-2q)/(2q)
    s = c / dc.gamma
    if not abs(s) < k:
        raise QuadratureError("moment diverges")
    Cp = amplitude(dc) ** dc.p
    return dc.omega * Cp / dc.gamma * 2 ** (k - 1) * float(beta_fn((k + s) / 2, (k - s) / 2))


def norm_pb_p(dc: DerivedConstants, h: float = 1e-2) -> float:
    """int |x|^{-bp} z_1^p dx (quadrature)."""
    return moment(dc, 0.0, h)


def norm_pb_p_exact(dc: DerivedConstants) -> float:
    return moment_exact(dc, 0.0)


def energy_f0(dc: DerivedConstants, h: float = 1e-2) -> float:
    """Unperturbed energy on the ground-state manifold, (1/2 - 1/p) ||z_1||_{p,b}^p."""
    return (0.5 - 1.0 / dc.p) * norm_pb_p(dc, h)

