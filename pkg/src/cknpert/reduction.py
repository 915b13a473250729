"""Finite-dimensional reduction for radial perturbations, executed numerically.

For each dilation parameter mu we solve, on the cylinder grid,

    S (z_mu + W) - (1 + eps k) (z_mu + W)_+^{p-1} - alpha S xi_mu = 0,
    (W, xi_mu) = 0,

for the correction ``W`` and multiplier ``alpha`` by Newton's method, where
``S`` is the stiffness matrix and ``xi_mu`` the unit tangent of the
ground-state family. The sampled profile ``z_mu`` solves the continuous
profile ODE exactly but the second-order discretization only to O(h^2), so
the eps = 0 solve returns a small ``W_0(mu)``: ``z_mu + W_0(mu)`` is the
discrete ground-state manifold. The reported correction is measured from it,

    w(mu, eps) = W(mu, eps) - W(mu, 0),

which vanishes identically at eps = 0 and keeps ``(w, xi_mu) = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.linalg import solve_banded

from . import closed_form as cf
from .grid import Grid, RadialProfile, StiffnessOperator, norm_h, sample, write_profile
from .params import DerivedConstants
from .perturbation import PerturbationSpec
from .spectral import nondegenerate

log = logging.getLogger(__name__)

__all__ = [
    "ConvergenceError",
    "CriticalPoint",
    "DegenerateManifoldError",
    "PROFILE_COLUMNS",
    "ReducedProblem",
    "ReductionResult",
    "G_functional",
    "Gamma",
    "Gamma0",
    "Gamma2_0",
    "Gamma2_0_fd",
    "Phi",
    "find_critical",
    "phi_profile",
    "solve_w",
    "tangent",
]

PROFILE_COLUMNS = ("mu", "phi", "gamma", "w_norm", "alpha", "newton_iters")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (last residual {residual:.3e})")
        self.residual = residual


class DegenerateManifoldError(RuntimeError):
    pass


@dataclass
class ReductionResult:
    mu: float
    eps: float
    w: RadialProfile
    alpha: float
    w_norm: float
    grad_residual: float
    full_residual: float
    phi_value: float
    newton_iters: int
    orthogonality: float = 0.0
    gamma: float = float("nan")
    extras: dict = field(default_factory=dict, repr=False)

    def scalars(self) -> dict:
        return {
            "mu": self.mu,
            "eps": self.eps,
            "alpha": self.alpha,
            "w_norm": self.w_norm,
            "grad_residual": self.grad_residual,
            "full_residual": self.full_residual,
            "phi_value": self.phi_value,
            "newton_iters": self.newton_iters,
        }

    def write(self, path=None) -> str:
        """Profile CSV of ``w`` with the scalars as ``# key=value`` header lines."""
        return write_profile(path, self.w, self.scalars())


@dataclass
class CriticalPoint:
    mu_star: float
    phi_value: float
    full_residual: float
    alpha: float
    kind: str  # "max" or "min"

    @property
    def certified(self) -> bool:
        return abs(self.alpha) <= 1e-8 and self.full_residual <= 1e-6


def tangent(mu: float, dc: DerivedConstants, grid: Grid) -> RadialProfile:
    """Unit tangent d z_mu / d mu of the ground-state family (energy norm)."""
    gs = cf.GroundState(dc, mu)
    v = sample(gs.dmu, grid)
    return v * (1.0 / norm_h(v, dc))


def G_functional(u: RadialProfile, k: PerturbationSpec, dc: DerivedConstants) -> float:
    """(1/p) int k u_+^p |x|^{-bp} dx for a radial profile."""
    g = u.grid
    up = np.maximum(u.values, 0.0)
    return dc.omega / dc.p * g.h * float(np.sum(k.on_cylinder(g.t) * up**dc.p))


def Gamma(mu: float, k: PerturbationSpec, dc: DerivedConstants, grid: Grid | None = None) -> float:
    """G evaluated on the ground state z_mu."""
    grid = grid or Grid()
    return G_functional(sample(cf.GroundState(dc, mu).profile, grid), k, dc)


def Gamma0(k: PerturbationSpec, dc: DerivedConstants) -> float:
    return k.k0 * cf.norm_pb_p(dc) / dc.p


def Gamma2_0(k: PerturbationSpec, dc: DerivedConstants) -> float:
    """Second mu-derivative of Gamma at mu = 0: Lap k(0)/(N p) int |x|^2 |x|^{-bp} z_1^p."""
    if k.laplacian0 is None:
        raise ValueError(f"{k} carries no Laplacian at the origin")
    return k.laplacian0 / (dc.N * dc.p) * cf.moment(dc, 2.0)


def Gamma2_0_fd(k: PerturbationSpec, dc: DerivedConstants, mu: float = 1e-3, grid: Grid | None = None) -> float:
    """Finite-difference Gamma''(0) from samples of Gamma at small mu.

    Gamma is even in mu, so the centered second difference at zero is
    2 (Gamma(mu) - Gamma(0)) / mu^2; one Richardson step in mu removes its
    O(mu^2) error.
    """
    g0 = Gamma0(k, dc)

    def d2(m):
        return 2.0 * (Gamma(m, k, dc, grid) - g0) / (m * m)

    return (4.0 * d2(mu) - d2(2.0 * mu)) / 3.0


class ReducedProblem:
    """Reduction machinery for fixed parameters, perturbation and grid.

    Holds the stiffness matrix, sampled k and a cache of the eps = 0
    corrections; :meth:`solve` is the per-(mu, eps) entry point.
    """

    def __init__(
        self,
        dc: DerivedConstants,
        k: PerturbationSpec,
        grid: Grid | None = None,
        tol: float = 1e-10,
        max_iter: int = 40,
        eps_max: float = 0.1,
        check_degeneracy: bool = True,
    ):
        self.dc, self.k = dc, k
        self.grid = grid or Grid()
        self.tol, self.max_iter, self.eps_max = tol, max_iter, eps_max
        if check_degeneracy:
            rep = nondegenerate(dc)
            if not rep.verdict:
                raise DegenerateManifoldError(
                    f"ground-state manifold is degenerate at {dc.params} "
                    f"(mode-0 kernel dim {rep.mode0_kernel_dim}, kernel modes {rep.kernel_modes})"
                )
        self.S = StiffnessOperator(self.grid, dc.LambdaTilde)
        self.kt = k.on_cylinder(self.grid.t)
        self._w0: dict[float, tuple[np.ndarray, float]] = {}
        self.wh = dc.omega * self.grid.h

    # --- discrete functionals -------------------------------------------

    def energy(self, u: np.ndarray, eps: float) -> float:
        up = np.maximum(u, 0.0)
        quad = 0.5 * float(u @ self.S.matvec(u))
        pot = float(np.sum((1.0 + eps * self.kt) * up**self.dc.p)) / self.dc.p
        return self.wh * (quad - pot)

    def dual_norm(self, r: np.ndarray) -> float:
        """Energy norm of S^{-1} r, i.e. of the gradient represented by ``r``."""
        return math.sqrt(max(self.wh * float(r @ self.S.solve_array(r)), 0.0))

    def _grad(self, u: np.ndarray, eps: float) -> np.ndarray:
        up = np.maximum(u, 0.0)
        return self.S.matvec(u) - (1.0 + eps * self.kt) * up ** (self.dc.p - 1)

    # --- Newton ------------------------------------------------------------

    def _newton(self, mu: float, eps: float):
        z = sample(cf.GroundState(self.dc, mu).profile, self.grid).values
        xi = tangent(mu, self.dc, self.grid).values
        Sxi = self.S.matvec(xi)
        n = self.grid.n
        W = np.zeros(n)
        alpha = 0.0
        p = self.dc.p
        resid = math.inf
        for it in range(self.max_iter + 1):
            u = z + W
            F1 = self._grad(u, eps) - alpha * Sxi
            F2 = self.wh * float(Sxi @ W)
            resid = math.hypot(self.dual_norm(F1), F2)
            if resid <= self.tol:
                return W, alpha, it, resid, z, xi, Sxi
            if not math.isfinite(resid):
                break
            up = np.maximum(u, 0.0)
            jd = self.S.diag - (1.0 + eps * self.kt) * (p - 1) * up ** (p - 2)
            dW, dalpha = self._bordered_solve(jd, Sxi, -F1, -F2)
            step = np.concatenate([dW, [dalpha]])
            W = W + step[:n]
            alpha = alpha + step[n]
        raise ConvergenceError(f"Newton did not converge at mu={mu:g}, eps={eps:g}", resid)

    def _bordered_solve(self, jd: np.ndarray, c: np.ndarray, f: np.ndarray, g: float):
        """Solve [[J, -c], [wh c^T, 0]] (x, a) = (f, g) for tridiagonal J.

        Block elimination: x = J^{-1} f + a J^{-1} c, then the constraint row
        fixes ``a``. J is nearly singular along the tangent at eps = 0, but
        the border removes exactly that direction, so the combination is well
        conditioned.
        """
        ab = np.zeros((3, len(jd)))
        ab[0, 1:] = self.S.off
        ab[1] = jd
        ab[2, :-1] = self.S.off
        y = solve_banded((1, 1), ab, np.column_stack([f, c]), check_finite=False)
        yf, yc = y[:, 0], y[:, 1]
        a = (g / self.wh - float(c @ yf)) / float(c @ yc)
        return yf + a * yc, a

    def _base(self, mu: float):
        if mu not in self._w0:
            W0, alpha0, _, _, _, _, _ = self._newton(mu, 0.0)
            self._w0[mu] = (W0, alpha0)
        return self._w0[mu]

    def solve(self, mu: float, eps: float) -> ReductionResult:
        if not mu > 0:
            raise ValueError(f"mu must be positive, got {mu}")
        if abs(eps) > self.eps_max:
            raise ValueError(f"|eps|={abs(eps):g} above ceiling {self.eps_max:g}")
        W0, _ = self._base(mu)
        W, alpha, iters, resid, z, xi, Sxi = self._newton(mu, eps)
        u = z + W
        F1 = self._grad(u, eps)
        full = self.dual_norm(F1)
        w = RadialProfile(self.grid, W - W0)
        w_norm = norm_h(w, self.dc)
        ortho = self.wh * float(Sxi @ w.values)
        return ReductionResult(
            mu=mu,
            eps=eps,
            w=w,
            alpha=alpha,
            w_norm=w_norm,
            grad_residual=resid,
            full_residual=full,
            phi_value=self.energy(u, eps),
            newton_iters=iters,
            orthogonality=ortho,
            extras={"base_energy": self.energy(z + W0, 0.0), "u": u},
        )

    def gamma_discrete(self, mu: float) -> float:
        """G on the discrete ground-state manifold point z_mu + W_0(mu)."""
        W0, _ = self._base(mu)
        z = sample(cf.GroundState(self.dc, mu).profile, self.grid)
        return G_functional(RadialProfile(self.grid, z.values + W0), self.k, self.dc)

    # --- sweeps -----------------------------------------------------------

    def profile(self, eps: float, mus) -> list[dict]:
        rows = []
        for mu in mus:
            try:
                r = self.solve(float(mu), eps)
                rows.append(
                    {
                        "mu": float(mu),
                        "phi": r.phi_value,
                        "gamma": Gamma(float(mu), self.k, self.dc, self.grid),
                        "w_norm": r.w_norm,
                        "alpha": r.alpha,
                        "newton_iters": r.newton_iters,
                        "base_energy": r.extras["base_energy"],
                        "ok": True,
                    }
                )
            except ConvergenceError as exc:
                log.warning("%s", exc)
                nan = float("nan")
                rows.append(dict(mu=float(mu), phi=nan, gamma=nan, w_norm=nan, alpha=nan, newton_iters=-1, base_energy=nan, ok=False))
        return rows

    def critical_points(self, eps: float, mus, refine_tol: float = 1e-6) -> tuple[list[CriticalPoint], list[dict]]:
        rows = self.profile(eps, mus)
        s = np.log([r["mu"] for r in rows])
        phi = np.array([r["phi"] for r in rows])
        thr = 1e2 * self.tol
        found: list[CriticalPoint] = []
        if not np.all(np.isfinite(phi)) or np.ptp(phi) <= thr:
            return found, rows
        for lo, hi, kind in _extremum_brackets(s, phi, thr):
            found.append(self._refine(eps, lo, hi, kind, refine_tol))
        return found, rows

    def _refine(self, eps: float, lo: float, hi: float, kind: str, refine_tol: float) -> CriticalPoint:
        sign = -1.0 if kind == "max" else 1.0

        def f(s):
            return sign * self.solve(math.exp(s), eps).phi_value

        a, b = lo, hi
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = f(c), f(d)
        while b - a > refine_tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - GOLDEN * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + GOLDEN * (b - a)
                fd = f(d)
        # the multiplier is proportional to dPhi/dmu; polish its root inside the final bracket
        s_star = 0.5 * (a + b)
        pad = max(refine_tol, 1e-4)
        ga = self.solve(math.exp(s_star - pad), eps).alpha
        gb = self.solve(math.exp(s_star + pad), eps).alpha
        if ga * gb < 0:
            s_star = brentq(lambda s: self.solve(math.exp(s), eps).alpha, s_star - pad, s_star + pad, xtol=1e-14, rtol=1e-15)
        res = self.solve(math.exp(s_star), eps)
        return CriticalPoint(math.exp(s_star), res.phi_value, res.full_residual, res.alpha, kind)


def _extremum_brackets(s: np.ndarray, phi: np.ndarray, thr: float):
    """Brackets [s_lo, s_hi] around interior extrema of sampled phi.

    Differences below ``thr`` count as flat so noise on plateaus does not
    produce extrema.
    """
    diffs = np.diff(phi)
    signs = [(i, 1 if d > 0 else -1) for i, d in enumerate(diffs) if abs(d) > thr]
    for (i, si), (j, sj) in zip(signs, signs[1:]):
        if si == sj:
            continue
        kind = "max" if si > 0 else "min"
        seg = phi[i + 1 : j + 1]
        k = i + 1 + int(np.argmax(seg) if kind == "max" else np.argmin(seg))
        yield s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)], kind


# --- functional wrappers ------------------------------------------------------


def solve_w(mu, eps, k, dc, grid=None, tol=1e-10) -> ReductionResult:
    return ReducedProblem(dc, k, grid, tol).solve(mu, eps)


def Phi(mu, eps, k, dc, grid=None) -> float:
    return ReducedProblem(dc, k, grid).solve(mu, eps).phi_value


def default_mu_grid(mu_min: float = math.exp(-10), mu_max: float = math.exp(10), points: int = 81) -> np.ndarray:
    return np.exp(np.linspace(math.log(mu_min), math.log(mu_max), points))


def phi_profile(eps, k, dc, mu_grid=None, grid=None) -> list[dict]:
    mus = default_mu_grid() if mu_grid is None else mu_grid
    return ReducedProblem(dc, k, grid).profile(eps, mus)


def find_critical(eps, k, dc, mu_range=(math.exp(-10), math.exp(10)), points: int = 81, refine_tol=1e-6, grid=None):
    rp = ReducedProblem(dc, k, grid)
    found, _ = rp.critical_points(eps, default_mu_grid(*mu_range, points), refine_tol)
    return found
