"""Fast invariant suite behind ``cknpert selfcheck``.

Each check recomputes a quantity two independent ways (or against a known
value) and reports pass/fail with the observed discrepancy.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_form as cf
from .grid import Grid, sample
from .params import constants
from .perturbation import PerturbationSpec, check_conditions
from .reduction import Gamma2_0, ReducedProblem, find_critical
from .spectral import nondegenerate, pt_spectrum_check, rayleigh


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _constants_identity():
    worst = 0.0
    for N, a, b, lam in [(3, 0, 0, 0), (4, 0, 0.3, 0), (5, 0.1, 0.3, -2.0), (6, -1.0, -0.5, 1.0)]:
        dc = constants(N, a, b, lam)
        lhs = math.sqrt(1 + 4 * dc.beta / dc.gamma**2)
        worst = max(worst, abs(lhs - (N + dc.q) / dc.q))
    return worst <= 1e-12, f"max |sqrt(1+4beta/gamma^2) - (N+q)/q| = {worst:.2e}"


def _ode_residual():
    worst = 0.0
    t = np.linspace(-30, 30, 6001)
    for args in [(4, 0, 0, 0), (5, 0.1, 0.3, -2.0), (3, -0.5, 0.2, 0.3)]:
        dc = constants(*args)
        r = np.abs(cf.ode_residual(t, dc))
        scale = np.abs(cf.d2phi1(t, dc)) + dc.LambdaTilde * cf.phi1(t, dc)
        mask = scale > 1e-200
        worst = max(worst, float(np.max(r[mask] / scale[mask])))
    return worst <= 1e-10, f"max relative residual {worst:.2e}"


def _transform():
    dc = constants(5, 0.1, 0.3, -2.0)
    r = np.logspace(-4, 4, 401)
    direct = cf.z1_direct(r, dc)
    via = r ** (-dc.weight_shift) * cf.phi1(np.log(r), dc)
    err = float(np.max(np.abs(direct - via) / np.abs(via)))
    return err <= 1e-12, f"max relative gap {err:.2e}"


def _pt():
    out = []
    for args in [(4, 0, 0, 0), (5, 0.1, 0.3, -2.0)]:
        rep = pt_spectrum_check(constants(*args))
        out.append(rep)
    ok = all(r.passed() for r in out)
    return ok, "; ".join(f"{len(r.numeric)} states, err {r.max_scaled_error:.1e}" for r in out)


def _anchors():
    deg = nondegenerate((4, 0, 0, 0))
    nd = nondegenerate((4, 0, 0.3, 0))
    ok = (not deg.verdict) and deg.kernel_modes == [1] and nd.verdict
    return ok, f"(4,0,0,0) kernel modes {deg.kernel_modes}; (4,0,0.3,0) non-degenerate={nd.verdict}"


def _energy():
    dc = constants(4, 0, 0, 0)
    e = cf.energy_f0(dc)
    rel = abs(e - 8 * math.pi**2 / 3) / (8 * math.pi**2 / 3)
    g = Gamma2_0(PerturbationSpec.rational(0, 1, 4), dc)
    rel2 = abs(g - 32 * math.pi**2 / 3) / (32 * math.pi**2 / 3)
    return max(rel, rel2) <= 1e-6, f"energy rel err {rel:.1e}, Gamma''(0) rel err {rel2:.1e}"


def _minimizer():
    # radial competitors never beat the ground state in the weighted Sobolev quotient
    dc = constants(4, 0, 0.3, 0)
    g = Grid()
    base = rayleigh(sample(lambda t: cf.phi1(t, dc), g), dc)
    rng = np.random.default_rng(7)
    worst = math.inf
    for _ in range(8):
        c, w, s = rng.uniform(-0.5, 0.5), rng.uniform(0.5, 3), rng.uniform(-2, 2)
        u = sample(lambda t: cf.phi1(t, dc) + c * np.exp(-(((t - s) / w) ** 2)), g)
        worst = min(worst, rayleigh(u, dc) / base)
    return worst >= 1 - 1e-6, f"min competitor/ground-state quotient {worst:.6f}"


def _reduction():
    dc = constants(4, 0, 0.3, 0)
    k = PerturbationSpec.gaussian_bump(1, 0, 1)
    rp = ReducedProblem(dc, k)
    r0 = rp.solve(1.0, 0.0)
    r1 = rp.solve(1.0, 1e-2)
    cps = find_critical(1e-2, k, dc)
    ok = r0.w_norm == 0.0 and abs(r1.orthogonality) <= 1e-10 and len(cps) >= 1 and all(c.certified for c in cps)
    mu = ", ".join(f"{c.mu_star:.6g}" for c in cps) or "none"
    return ok, f"orthogonality {abs(r1.orthogonality):.1e}; mu* = {mu}"


def _conditions():
    ok = (
        check_conditions(PerturbationSpec.gaussian_bump(1, 0, 1)).vanishing_ends
        and check_conditions(PerturbationSpec.rational(0, 1, 4)).positive_laplacian
        and check_conditions(PerturbationSpec.rational(1, 0, 4)).holds == []
    )
    return ok, "gaussian-bump, rational(0,1), rational(1,0)"


CHECKS: list[tuple[str, Callable]] = [
    ("constants-identity", _constants_identity),
    ("ode-residual", _ode_residual),
    ("cylinder-transform", _transform),
    ("poschl-teller", _pt),
    ("degeneracy-anchors", _anchors),
    ("closed-form-energy", _energy),
    ("radial-minimizer", _minimizer),
    ("perturbation-conditions", _conditions),
    ("reduction", _reduction),
]


def run() -> list[Check]:
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not an aborted suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(Check(name, bool(ok), detail, time.perf_counter() - t0))
    return out
