"""Uniform Dirichlet grid on the cylinder coordinate t = ln r.

Radial functions are stored through their cylinder profile ``v`` with
``u(r) = r^{-(N-2-2a)/2} v(ln r)``. In these variables both the energy norm
and the weighted L^p norm lose their power weights, so every integral below
is a plain sum over nodes times ``omega`` (the sphere measure).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import solveh_banded

from .params import DerivedConstants

__all__ = [
    "DEFAULT_L",
    "DEFAULT_N",
    "Grid",
    "GridMismatchError",
    "RadialProfile",
    "StiffnessOperator",
    "inner_h",
    "norm_h",
    "lp_pb",
    "read_profile",
    "sample",
    "write_profile",
]

DEFAULT_L = 40.0
DEFAULT_N = 8000


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    L: float = DEFAULT_L
    n: int = DEFAULT_N

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    @cached_property
    def t(self) -> np.ndarray:
        t = -self.L + self.h * np.arange(1, self.n + 1)
        t.flags.writeable = False
        return t

    def refined(self) -> "Grid":
        """Same box, half the spacing; old nodes are every other new node."""
        return Grid(self.L, 2 * self.n + 1)

    @classmethod
    def with_spacing(cls, L: float, h: float) -> "Grid":
        return cls(L, max(3, int(round(2 * L / h)) - 1))

    @classmethod
    def adapted(cls, decay_lengths, L_min: float = DEFAULT_L, h: float | None = None, margin: float = 12.0) -> "Grid":
        """Grid whose half-width covers ``margin`` times the longest decay length.

        Spacing is kept at the default ``2*DEFAULT_L/(DEFAULT_N+1)`` unless
        given, so the box grows by adding nodes.
        """
        if h is None:
            h = 2 * DEFAULT_L / (DEFAULT_N + 1)
        L = max([L_min] + [margin * ell for ell in decay_lengths])
        if L == L_min and math.isclose(h, 2 * L_min / (DEFAULT_N + 1)):
            return cls(L_min, DEFAULT_N)
        return cls.with_spacing(L, h)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile has non-finite values")
        object.__setattr__(self, "values", vals)

    def _check(self, other: "RadialProfile") -> None:
        if other.grid != self.grid:
            raise GridMismatchError(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        return RadialProfile(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return RadialProfile(self.grid, self.values - other.values)

    def __mul__(self, c: float):
        return RadialProfile(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return RadialProfile(self.grid, -self.values)

    @classmethod
    def zeros(cls, grid: Grid) -> "RadialProfile":
        return cls(grid, np.zeros(grid.n))


def sample(f: Callable[[np.ndarray], np.ndarray], grid: Grid) -> RadialProfile:
    vals = np.broadcast_to(np.asarray(f(grid.t), dtype=float), (grid.n,)).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function is not finite on the grid")
    return RadialProfile(grid, vals)


def _edge_diffs(x: np.ndarray) -> np.ndarray:
    # includes both Dirichlet edges, x_0 = x_{n+1} = 0
    return np.diff(x, prepend=0.0, append=0.0)


def inner_h(u: RadialProfile, v: RadialProfile, dc: DerivedConstants) -> float:
    """Discrete energy scalar product (u, v).

    omega * [sum_edges (du dv)/h + h LambdaTilde sum u v], i.e.
    omega * h * u^T S v with S the stiffness matrix.
    """
    u._check(v)
    h = u.grid.h
    du, dv = _edge_diffs(u.values), _edge_diffs(v.values)
    return dc.omega * (float(du @ dv) / h + h * dc.LambdaTilde * float(u.values @ v.values))


def norm_h(u: RadialProfile, dc: DerivedConstants) -> float:
    return math.sqrt(inner_h(u, u, dc))


def lp_pb(u: RadialProfile, dc: DerivedConstants, p: float | None = None) -> float:
    """Weighted L^p norm ||u||_{p,b}; the radial weights cancel exactly on the cylinder."""
    if p is None:
        p = dc.p
    if p < 1:
        raise ValueError("p must be >= 1")
    return (dc.omega * u.grid.h * float(np.sum(np.abs(u.values) ** p))) ** (1.0 / p)


class StiffnessOperator:
    """Tridiagonal S = -D^2 + LambdaTilde with Dirichlet ends.

    Diagonal ``2/h^2 + LambdaTilde``, off-diagonal ``-1/h^2``. Positive
    definite whenever LambdaTilde > 0.
    """

    def __init__(self, grid: Grid, LambdaTilde: float):
        self.grid = grid
        self.LambdaTilde = float(LambdaTilde)
        h2 = grid.h**2
        self.diag = np.full(grid.n, 2.0 / h2 + self.LambdaTilde)
        self.off = np.full(grid.n - 1, -1.0 / h2)
        # upper-form banded storage for solveh_banded
        self._ab = np.vstack([np.concatenate([[0.0], self.off]), self.diag])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def solve_array(self, rhs: np.ndarray) -> np.ndarray:
        return solveh_banded(self._ab, rhs, check_finite=False)

    def apply(self, u: RadialProfile) -> RadialProfile:
        self._own(u)
        return RadialProfile(self.grid, self.matvec(u.values))

    def solve(self, rhs: RadialProfile) -> RadialProfile:
        self._own(rhs)
        return RadialProfile(self.grid, self.solve_array(rhs.values))

    def _own(self, u: RadialProfile) -> None:
        if u.grid != self.grid:
            raise GridMismatchError(f"{u.grid} vs {self.grid}")

    def dirichlet_eigenvalue(self, m: int) -> float:
        """m-th eigenvalue (m >= 1) of the discrete operator, closed form."""
        return 2.0 / self.grid.h**2 * (1 - math.cos(m * math.pi / (self.grid.n + 1))) + self.LambdaTilde


# --- CSV ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_profile(path, profile: RadialProfile, scalars: dict | None = None) -> str:
    """Two-column ``t,value`` CSV with a ``# L=.. n=.. convention=t=ln(r)`` header.

    ``scalars`` become extra ``# key=value`` lines after the grid line.
    Returns the text; writes it when ``path`` is not None.
    """
    g = profile.grid
    buf = io.StringIO()
    buf.write(f"# L={_fmt(g.L)} n={g.n} convention=t=ln(r)\n")
    for k, v in (scalars or {}).items():
        buf.write(f"# {k}={_fmt(v) if isinstance(v, float) else v}\n")
    buf.write("t,value\n")
    for t, v in zip(g.t, profile.values):
        buf.write(f"{t:.17g},{v:.17g}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_profile(path) -> tuple[RadialProfile, dict]:
    scalars: dict[str, str] = {}
    grid = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("L="):
                fields = dict(tok.split("=", 1) for tok in body.split())
                grid = Grid(float(fields["L"]), int(fields["n"]))
            elif "=" in body:
                k, v = body.split("=", 1)
                scalars[k.strip()] = v.strip()
        elif line and not line.startswith("t,"):
            rows.append(float(line.split(",")[1]))
    if grid is None:
        raise ValueError(f"{path}: missing '# L=.. n=..' header")
    return RadialProfile(grid, np.array(rows)), scalars
