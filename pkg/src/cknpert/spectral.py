"""Per-mode spectrum of the linearization around the ground state.

Expanding a kernel candidate in spherical harmonics of degree ``i`` and
passing to the cylinder variable gives one Schrodinger operator per mode,

    L_i = -d^2/dt^2 + LambdaTilde + i(N+i-2) - (p-1) phi1(t)^{p-2},

whose potential term equals ``-beta sech^2(gamma t)``. Everything here is
computed numerically from the discretized operators and is meant to be
compared against the closed forms, never derived from them (the closed forms
only size the box and pick how many eigenvalues to ask for).

Eigenvalues of the second-order discretization carry an O(h^2) error. The
``*_extrapolated`` routines remove it by one grid refinement (h -> h/2) and
Richardson extrapolation, which is what the kernel tolerances assume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import closed_form as cf
from .grid import DEFAULT_L, DEFAULT_N, Grid, RadialProfile, inner_h, lp_pb
from .params import DerivedConstants, ProblemParams, constants, derive, validate
from .sturm import count_below, eigvals_bisect

__all__ = [
    "ModeOperator",
    "NondegeneracyReport",
    "PTReport",
    "SymmetryReport",
    "eigen_extrapolated",
    "eigen_lowest",
    "ground_eigenvector",
    "kernel_tolerance",
    "mode_grid",
    "nondegenerate",
    "pt_spectrum_check",
    "rayleigh",
    "symmetry_breaking",
]

EIG_TOL = 1e-10


def kernel_tolerance(dc: DerivedConstants) -> float:
    return 1e-6 * max(1.0, dc.LambdaTilde)


def mode_grid(dc: DerivedConstants, L_min: float = DEFAULT_L, h: float | None = None) -> Grid:
    """Default spectral grid, widened when a bound state or the potential is too wide.

    The box half-width is at least ``L_min``; wide enough that the Dirichlet
    shift of the shallowest Poschl-Teller level, about 4 kappa^2 exp(-2 kappa L),
    stays below 1e-10; 12 decay lengths of the ground state; and 18.5 widths
    of the sech^2 well (where sech^2 drops below 1e-16). When the box has to grow
    and the deepest state is wider than in the reference case (kappa_0 = 2),
    the spacing grows with it so the node count stays bounded.
    """
    kappa_last = math.sqrt(-cf.nu(cf.bound_state_count(dc) - 1, dc))
    kappa0 = math.sqrt(-cf.nu(0, dc))
    wall = max(math.log(4e10 * kappa_last**2), 6.0) / (2 * kappa_last)
    need = max(wall, 12.0 / dc.decay_rate, 18.5 / dc.gamma)
    if need <= L_min:
        return Grid.adapted([], L_min=L_min, h=h)
    if h is None:
        h = 2 * DEFAULT_L / (DEFAULT_N + 1) * max(1.0, 2.0 / kappa0)
    return Grid.with_spacing(need, h)


class ModeOperator:
    """Symmetric tridiagonal discretization of one mode operator.

    ``kind="ground"`` builds L_i with the potential taken from the sampled
    ground state; ``kind="pt"`` is the bare -d^2 - beta sech^2(gamma t) (no
    shift, ``mode`` ignored); ``kind="free"`` drops the potential.
    """

    def __init__(self, dc: DerivedConstants, grid: Grid, mode: int = 0, kind: str = "ground"):
        if mode < 0:
            raise ValueError("mode must be nonnegative")
        if kind not in ("ground", "pt", "free"):
            raise ValueError(f"unknown operator kind {kind!r}")
        self.dc, self.grid, self.mode, self.kind = dc, grid, mode, kind
        t = grid.t
        if kind == "pt":
            shift = 0.0
            V = -dc.beta * np.exp(-2.0 * cf.log_cosh(dc.gamma * t))
        else:
            shift = dc.LambdaTilde + mode * (dc.N + mode - 2)
            if kind == "free":
                V = np.zeros_like(t)
            else:
                V = -(dc.p - 1) * cf.phi1(t, dc) ** (dc.p - 2)
        self.potential = V
        self.shift = shift
        h2 = grid.h**2
        self.diag = 2.0 / h2 + shift + V
        self.off = np.full(grid.n - 1, -1.0 / h2)

    def refined(self) -> "ModeOperator":
        return ModeOperator(self.dc, self.grid.refined(), self.mode, self.kind)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def count_below(self, x: float) -> int:
        return count_below(self.diag, self.off, x)

    def potential_identity_error(self) -> float:
        """max relative gap between (p-1) phi1^{p-2} and beta sech^2(gamma t)."""
        ref = self.dc.beta * np.exp(-2.0 * cf.log_cosh(self.dc.gamma * self.grid.t))
        got = (self.dc.p - 1) * cf.phi1(self.grid.t, self.dc) ** (self.dc.p - 2)
        mask = ref > 1e-250
        return float(np.max(np.abs(got[mask] - ref[mask]) / ref[mask]))


def eigen_lowest(op: ModeOperator, count: int, start: int = 0) -> np.ndarray:
    """``count`` smallest eigenvalues (from index ``start``) of the raw matrix."""
    if count > op.grid.n:
        raise ValueError("count exceeds matrix size")
    return eigvals_bisect(op.diag, op.off, start, start + count, EIG_TOL)


def eigen_extrapolated(op: ModeOperator, count: int, start: int = 0) -> np.ndarray:
    """Richardson-extrapolated eigenvalues from ``op`` and its h/2 refinement."""
    coarse = eigen_lowest(op, count, start)
    fine = eigen_lowest(op.refined(), count, start)
    return (4.0 * fine - coarse) / 3.0


def ground_eigenvector(op: ModeOperator, eigenvalue: float | None = None, iters: int = 3) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the raw matrix by shifted inverse iteration."""
    if eigenvalue is None:
        eigenvalue = float(eigen_lowest(op, 1)[0])
    n = op.grid.n
    sigma = eigenvalue - 1e-9 * max(1.0, abs(eigenvalue))
    ab = np.zeros((3, n))
    ab[0, 1:] = op.off
    ab[1] = op.diag - sigma
    ab[2, :-1] = op.off
    x = np.exp(-0.5 * op.grid.t**2)
    for _ in range(iters):
        x = solve_banded((1, 1), ab, x, check_finite=False)
        x /= np.linalg.norm(x)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return eigenvalue, x


# --- reports -----------------------------------------------------------------


@dataclass
class PTReport:
    numeric: list[float]
    closed_form: list[float]
    max_scaled_error: float
    negative_count: int
    expected_count: int
    min_gap: float
    grid: Grid

    @property
    def simple(self) -> bool:
        return self.min_gap > 1e-8

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_scaled_error <= tol and self.negative_count == self.expected_count and self.simple


def pt_spectrum_check(dc: DerivedConstants, grid: Grid | None = None) -> PTReport:
    """Numerical negative spectrum of the bare Poschl-Teller operator vs nu_j.

    Error is measured as |numeric - nu_j| / max(1, |nu_j|).
    """
    grid = grid or mode_grid(dc)
    op = ModeOperator(dc, grid, kind="pt")
    expected = cf.bound_state_count(dc)
    exact = [cf.nu(j, dc) for j in range(expected)]
    negative = op.refined().count_below(0.0)
    numeric = eigen_extrapolated(op, max(expected, 1))
    err = max(abs(x - y) / max(1.0, abs(y)) for x, y in zip(numeric, exact))
    gaps = np.diff(numeric) if len(numeric) > 1 else np.array([np.inf])
    return PTReport(
        numeric=[float(x) for x in numeric],
        closed_form=exact,
        max_scaled_error=float(err),
        negative_count=negative,
        expected_count=expected,
        min_gap=float(np.min(gaps)),
        grid=grid,
    )


@dataclass
class NondegeneracyReport:
    verdict: bool
    margins: dict[int, float]
    mode0_kernel_dim: int
    kernel_modes: list[int]
    i_max: int
    tol: float
    eigenvalues: dict[int, list[float]] = field(repr=False, default_factory=dict)


def _near_zero(op: ModeOperator, tol: float) -> np.ndarray:
    """Extrapolated eigenvalues bracketing zero; one extra refinement if ambiguous."""
    c = op.count_below(0.0)
    start = max(0, c - 2)
    vals = eigen_extrapolated(op, min(c + 2, op.grid.n) - start, start)
    ambiguous = np.any((np.abs(vals) > tol) & (np.abs(vals) < 10 * tol))
    if ambiguous:
        vals = eigen_extrapolated(op.refined(), len(vals), start)
    return vals


def _as_dc(params) -> DerivedConstants:
    if isinstance(params, DerivedConstants):
        return params
    if isinstance(params, ProblemParams):
        return derive(validate(params))
    return constants(*params)


def nondegenerate(params, grid: Grid | None = None) -> NondegeneracyReport:
    """Numerical non-degeneracy test of the ground-state manifold.

    Mode 0 must have exactly one eigenvalue within tolerance of zero (the
    dilation direction); every mode i >= 1 up to the first provably positive
    one must have none.
    """
    dc = _as_dc(params)
    grid = grid or mode_grid(dc)
    tol = kernel_tolerance(dc)
    nu0 = cf.nu(0, dc)
    i_max = 1
    while dc.LambdaTilde + i_max * (dc.N + i_max - 2) + nu0 <= 0:
        i_max += 1
    margins: dict[int, float] = {}
    eigs: dict[int, list[float]] = {}
    kernel_modes = []
    mode0_dim = 0
    for i in range(0, i_max + 1):
        vals = _near_zero(ModeOperator(dc, grid, i), tol)
        eigs[i] = [float(v) for v in vals]
        hits = int(np.sum(np.abs(vals) <= tol))
        if i == 0:
            mode0_dim = hits
            continue
        margins[i] = float(np.min(np.abs(vals)))
        if hits:
            kernel_modes.append(i)
    verdict = mode0_dim == 1 and not kernel_modes
    return NondegeneracyReport(verdict, margins, mode0_dim, kernel_modes, i_max, tol, eigs)


@dataclass
class SymmetryReport:
    a: float
    b: float
    N: int
    breaks: bool
    mode1_bottom: float
    curve_b: float

    @property
    def curve_breaks(self) -> bool:
        return self.b < self.curve_b

    @property
    def agree(self) -> bool:
        return self.breaks == self.curve_breaks


def symmetry_breaking(a: float, b: float, N: int, grid: Grid | None = None) -> SymmetryReport:
    """Sign test on the bottom of the mode-1 spectrum at lambda = 0.

    A negative mode-1 eigenvalue means the radial ground state is not a local
    minimizer of the weighted Sobolev quotient.
    """
    dc = constants(N, a, b, 0.0)
    grid = grid or mode_grid(dc)
    op = ModeOperator(dc, grid, 1)
    bottom = float(eigen_extrapolated(op, 1)[0])
    tol = kernel_tolerance(dc)
    if abs(bottom) < 10 * tol:
        bottom = float(eigen_extrapolated(op.refined(), 1)[0])
    return SymmetryReport(a, b, N, bottom < -tol, bottom, cf.h_derived(1, a, 0.0, N))


def rayleigh(u: RadialProfile, dc: DerivedConstants) -> float:
    """Weighted Sobolev quotient ||u||^2 / ||u||_{p,b}^2 of a radial profile."""
    den = lp_pb(u, dc)
    if den == 0.0:
        raise ValueError("Rayleigh quotient of the zero profile")
    return inner_h(u, u, dc) / den**2
