"""Parameter domain and derived scalars for the weighted critical problem.

The problem is fixed by the tuple ``(N, a, b, lambda)``. Everything else used
downstream (critical exponent, cylinder mass, Poschl-Teller amplitude/width,
sphere measure) is derived here once and carried in :class:`DerivedConstants`.
"""

from __future__ import annotations

import math
import numbers
import warnings
from dataclasses import dataclass, field

__all__ = [
    "ProblemParams",
    "DerivedConstants",
    "ParameterError",
    "LargeExponentWarning",
    "validate",
    "derive",
    "constants",
    "sphere_measure",
    "P_WARN_THRESHOLD",
]

P_WARN_THRESHOLD = 50.0


class ParameterError(ValueError):
    """Raised when ``(N, a, b, lambda)`` leaves the admissible domain.

    ``inequality`` holds the violated condition verbatim so callers (and the
    CLI exit-code mapping) can tell the four failure modes apart.
    """

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        msg = f"{inequality} violated"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class LargeExponentWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ProblemParams:
    N: int
    a: float
    b: float
    lam: float = 0.0

    @property
    def lambda_max(self) -> float:
        return ((self.N - 2 - 2 * self.a) / 2) ** 2


@dataclass(frozen=True)
class DerivedConstants:
    params: ProblemParams
    p: float
    q: float
    LambdaTilde: float
    LambdaFour: float
    beta: float
    gamma: float
    omega: float
    warnings: tuple[str, ...] = field(default=(), compare=False)

    # convenience passthroughs
    @property
    def N(self) -> int:
        return self.params.N

    @property
    def a(self) -> float:
        return self.params.a

    @property
    def b(self) -> float:
        return self.params.b

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def decay_rate(self) -> float:
        """Exponential decay rate of the ground-state profile, sqrt(LambdaTilde)."""
        return math.sqrt(self.LambdaTilde)

    @property
    def weight_shift(self) -> float:
        """(N-2-2a)/2, the power in u(r) = r^{-(N-2-2a)/2} v(ln r)."""
        return (self.N - 2 - 2 * self.a) / 2


def validate(params: ProblemParams) -> ProblemParams:
    """Return ``params`` unchanged if admissible, else raise :class:`ParameterError`.

    The checks run in a fixed order (N, a, lambda, b) so the reported
    inequality is deterministic when several fail.
    """
    N, a, b, lam = params.N, params.a, params.b, params.lam
    if isinstance(N, bool) or not isinstance(N, numbers.Integral):
        raise ParameterError("N integer", f"N={N!r}")
    for name, val in (("a", a), ("b", b), ("lambda", lam)):
        if not math.isfinite(val):
            raise ParameterError(f"{name} finite", f"{name}={val!r}")
    if N < 3:
        raise ParameterError("N ≥ 3", f"N={N}")
    if not a < (N - 2) / 2:
        raise ParameterError("a < (N−2)/2", f"a={a}, (N-2)/2={(N - 2) / 2}")
    lmax = ((N - 2 - 2 * a) / 2) ** 2
    if not lam < lmax:
        raise ParameterError("λ < ((N−2−2a)/2)²", f"lambda={lam}, bound={lmax}")
    if not (a <= b < a + 1):
        raise ParameterError("a ≤ b < a+1", f"a={a}, b={b}")
    return params


def sphere_measure(N: int) -> float:
    """Surface measure of the unit (N-1)-sphere, 2 pi^{N/2} / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


def derive(params: ProblemParams) -> DerivedConstants:
    """Compute all derived scalars for validated ``params``.

    Emits :class:`LargeExponentWarning` (and records it on the result) when
    the critical exponent exceeds :data:`P_WARN_THRESHOLD`.
    """
    N, a, b, lam = params.N, params.a, params.b, params.lam
    q = 1.0 + a - b
    p = 2.0 * N / (N - 2.0 * q)
    four = (N - 2.0 - 2.0 * a) ** 2 - 4.0 * lam
    tilde = ((N - 2.0 - 2.0 * a) / 2.0) ** 2 - lam
    beta = N * (N + 2.0 * q) * four / (4.0 * (N - 2.0 * q) ** 2)
    gamma = q * math.sqrt(four) / (N - 2.0 * q)
    notes: tuple[str, ...] = ()
    if p > P_WARN_THRESHOLD:
        msg = f"p={p:.6g} > {P_WARN_THRESHOLD:g}: quadrature of u^p is ill-conditioned"
        warnings.warn(msg, LargeExponentWarning, stacklevel=2)
        notes = (msg,)
    return DerivedConstants(
        params=params,
        p=p,
        q=q,
        LambdaTilde=tilde,
        LambdaFour=four,
        beta=beta,
        gamma=gamma,
        omega=sphere_measure(N),
        warnings=notes,
    )


def constants(N: int, a: float, b: float, lam: float = 0.0) -> DerivedConstants:
    """Shorthand for ``derive(validate(ProblemParams(N, a, b, lam)))``."""
    return derive(validate(ProblemParams(N, a, b, lam)))
