"""Radial perturbations k(r) and the hypotheses they satisfy.

Three families, addressed by a small description language used by the CLI::

    gaussian-bump:c,t0,s      k(r) = c exp(-(ln r - t0)^2 / s^2)
    rational:alpha,beta       k(r) = (alpha + beta r^2) / (1 + r^2)^2
    tabulated:<path>          monotone cubic through an (r, k) table

Each perturbation carries k(0), k(infinity) and the Laplacian at the origin, which
decide which existence mechanism applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = ["PerturbationSpec", "PerturbationParseError", "ConditionReport", "check_conditions"]

KINDS = ("gaussian-bump", "rational", "tabulated")


class PerturbationParseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    kind: str
    args: tuple[float, ...]
    k0: float
    kinf: float
    laplacian0: float | None
    N: int | None = None
    source: str | None = None
    _table: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    # --- constructors ----------------------------------------------------

    @classmethod
    def gaussian_bump(cls, c: float, t0: float, s: float) -> "PerturbationSpec":
        if not s > 0:
            raise PerturbationParseError("gaussian-bump width s must be positive")
        return cls("gaussian-bump", (float(c), float(t0), float(s)), 0.0, 0.0, 0.0)

    @classmethod
    def rational(cls, alpha: float, beta: float, N: int) -> "PerturbationSpec":
        # (alpha + beta r^2)(1 - 2 r^2 + ...) = alpha + (beta - 2 alpha) r^2 + O(r^4)
        return cls("rational", (float(alpha), float(beta)), float(alpha), 0.0, 2.0 * N * (beta - 2.0 * alpha), N)

    @classmethod
    def tabulated(cls, r, k, k0: float, kinf: float, laplacian0: float | None = None, source: str | None = None):
        r = np.asarray(r, dtype=float)
        k = np.asarray(k, dtype=float)
        if r.ndim != 1 or r.shape != k.shape or len(r) < 1:
            raise PerturbationParseError("table needs matching 1-d r and k columns")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise PerturbationParseError("table radii must be positive and strictly increasing")
        return cls("tabulated", (), float(k0), float(kinf), laplacian0, None, source, (r, k))

    @classmethod
    def constant(cls, c: float) -> "PerturbationSpec":
        """k == c, stored as a one-row table."""
        return cls.tabulated([1.0], [c], c, c, 0.0, source=f"constant {c!r}")

    @classmethod
    def from_file(cls, path) -> "PerturbationSpec":
        """Read ``r,k`` rows; metadata from ``# k0=.. kinf=.. laplacian0=..`` comments."""
        meta: dict[str, float] = {}
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = float(val)
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                if rows:
                    raise PerturbationParseError(f"{path}: bad row {line!r}") from None
        if not rows:
            raise PerturbationParseError(f"{path}: no data rows")
        for key in ("k0", "kinf"):
            if key not in meta:
                raise PerturbationParseError(f"{path}: missing '# {key}=' metadata")
        r, k = np.array(rows).T
        return cls.tabulated(r, k, meta["k0"], meta["kinf"], meta.get("laplacian0"), source=str(path))

    @classmethod
    def parse(cls, text: str, N: int) -> "PerturbationSpec":
        kind, sep, body = text.partition(":")
        if not sep or kind not in KINDS:
            raise PerturbationParseError(f"expected one of {', '.join(k + ':...' for k in KINDS)}; got {text!r}")
        if kind == "tabulated":
            return cls.from_file(body)
        try:
            vals = [float(x) for x in body.split(",")]
        except ValueError:
            raise PerturbationParseError(f"non-numeric arguments in {text!r}") from None
        want = 3 if kind == "gaussian-bump" else 2
        if len(vals) != want:
            raise PerturbationParseError(f"{kind} takes {want} arguments, got {len(vals)}")
        if kind == "gaussian-bump":
            return cls.gaussian_bump(*vals)
        return cls.rational(*vals, N=N)

    # --- evaluation ------------------------------------------------------

    def __str__(self) -> str:
        if self.kind == "tabulated":
            return f"tabulated:{self.source}"
        return f"{self.kind}:" + ",".join(repr(x) for x in self.args)

    def on_cylinder(self, t) -> np.ndarray:
        """k(e^t)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian-bump":
            c, t0, s = self.args
            return c * np.exp(-(((t - t0) / s) ** 2))
        if self.kind == "rational":
            alpha, beta = self.args
            y = np.exp(-2.0 * np.abs(t))  # r^2 or r^-2, whichever is <= 1
            return np.where(t > 0, (alpha * y * y + beta * y) / (1.0 + y) ** 2, (alpha + beta * y) / (1.0 + y) ** 2)
        r, k = self._table
        if len(r) == 1:
            return np.full_like(t, k[0])
        f = PchipInterpolator(np.log(r), k, extrapolate=False)
        out = f(t)
        out = np.where(t < math.log(r[0]), k[0], out)
        return np.where(t > math.log(r[-1]), k[-1], out)

    def __call__(self, r) -> np.ndarray:
        return self.on_cylinder(np.log(np.asarray(r, dtype=float)))


@dataclass
class ConditionReport:
    vanishing_ends: bool  # k(0) = k(inf) = 0
    positive_laplacian: bool  # limsup_inf k <= k(0) and Laplacian k(0) > 0
    negative_laplacian: bool  # liminf_inf k >= k(0) and Laplacian k(0) < 0

    @property
    def holds(self) -> list[str]:
        names = ("vanishing-ends", "positive-laplacian", "negative-laplacian")
        flags = (self.vanishing_ends, self.positive_laplacian, self.negative_laplacian)
        return [n for n, f in zip(names, flags) if f]

    @property
    def prediction(self) -> str:
        if self.vanishing_ends:
            return "critical point: Phi tends to f0(z1) at both ends of the manifold"
        if self.positive_laplacian:
            return "critical point: Gamma has an interior global maximum"
        if self.negative_laplacian:
            return "critical point: Gamma has an interior global minimum"
        return "no prediction"


def check_conditions(k: PerturbationSpec) -> ConditionReport:
    """Evaluate the three sufficient conditions from the perturbation metadata."""
    lap = k.laplacian0
    return ConditionReport(
        vanishing_ends=k.k0 == 0.0 and k.kinf == 0.0,
        positive_laplacian=lap is not None and k.kinf <= k.k0 and lap > 0,
        negative_laplacian=lap is not None and k.kinf >= k.k0 and lap < 0,
    )
