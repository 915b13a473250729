"""Command-line interface.

Every command writes CSV (or ``#``-commented text) to ``--out`` or stdout.
The first lines echo the version and a canonical command line; rerunning
that command reproduces the output byte for byte.

Exit codes: 0 success, 1 parameter/domain error, 2 solver non-convergence,
3 certificate failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import closed_form as cf
from .grid import DEFAULT_L, DEFAULT_N, Grid, sample
from .params import ParameterError, constants
from .perturbation import PerturbationParseError, PerturbationSpec, check_conditions
from .reduction import (
    PROFILE_COLUMNS,
    ConvergenceError,
    DegenerateManifoldError,
    Gamma,
    Gamma0,
    Gamma2_0,
    ReducedProblem,
    default_mu_grid,
)
from .spectral import nondegenerate, pt_spectrum_check, symmetry_breaking

EXIT_OK, EXIT_PARAM, EXIT_CONVERGENCE, EXIT_CERTIFICATE = 0, 1, 2, 3


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


class Output:
    def __init__(self, args, argv_echo: str):
        self.buf = io.StringIO()
        self.csv = csv.writer(self.buf, lineterminator="\n")
        self.comment(f"cknpert {__version__}")
        self.comment(f"command: {argv_echo}")

    def comment(self, text: str) -> None:
        for line in text.splitlines() or [""]:
            self.buf.write(f"# {line}\n")

    def row(self, *values) -> None:
        self.csv.writerow([fmt(v) for v in values])

    def header(self, *names) -> None:
        self.csv.writerow(names)

    def flush(self, path) -> None:
        text = self.buf.getvalue()
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


# --- argument parsing --------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# canonical order for the echoed command line, per subcommand
ECHO = {
    "curves": ["N", "lambda", "a_min", "a_max", "a_points", "j"],
    "regions": ["N", "a_min", "a_max", "a_points", "s_min", "s_max", "s_points", "L", "n"],
    "spectrum": ["N", "a", "b", "lambda", "L", "n"],
    "groundstate": ["N", "a", "b", "lambda", "L", "n"],
    "gamma": ["N", "a", "b", "lambda", "L", "n", "k", "mu_min", "mu_max", "mu_points"],
    "reduce": ["N", "a", "b", "lambda", "L", "n", "k", "eps", "mu_min", "mu_max", "mu_points"],
    "solve": ["N", "a", "b", "lambda", "L", "n", "k", "eps", "mu_min", "mu_max", "mu_points"],
    "selfcheck": [],
}


def echo_command(args) -> str:
    parts = ["cknpert", args.command]
    for name in ECHO[args.command]:
        val = getattr(args, name.replace("lambda", "lam"))
        if val is None:
            continue
        flag = "--" + name.replace("_", "-")
        # shortest round-trip repr: exact, and readable
        if isinstance(val, list):
            val = ",".join(repr(v) for v in val)
        else:
            val = repr(val)
        parts.append(f"{flag} {val}")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cknpert", description="Ground states, spectra and perturbative reduction for weighted critical equations.")
    ap.add_argument("--version", action="version", version=f"cknpert {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def point(p, b_default=0.0):
        p.add_argument("--N", type=int, default=4)
        p.add_argument("--a", type=float, default=0.0)
        p.add_argument("--b", type=float, default=b_default)
        p.add_argument("--lambda", dest="lam", type=float, default=0.0)

    def grid(p):
        p.add_argument("--L", type=float, default=None, help=f"box half-width (default {DEFAULT_L}, widened when needed)")
        p.add_argument("--n", type=int, default=None, help=f"interior nodes (default {DEFAULT_N})")

    def out(p):
        p.add_argument("--out", default=None, help="output file (default stdout)")

    def jobs(p):
        p.add_argument("--jobs", type=int, default=1, help="worker processes; output order does not depend on it")

    def mus(p, points):
        p.add_argument("--mu-min", type=float, default=math.exp(-10))
        p.add_argument("--mu-max", type=float, default=math.exp(10))
        p.add_argument("--mu-points", type=int, default=points)

    p = sub.add_parser("curves", help="degeneracy curves h_j(a, lambda)")
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--a-min", type=float, default=-2.0)
    p.add_argument("--a-max", type=float, default=0.9)
    p.add_argument("--a-points", type=int, default=30)
    p.add_argument("--j", type=_ints, default=[1, 2, 3, 4, 5])
    out(p)

    p = sub.add_parser("regions", help="symmetry-breaking map on an (a, b=a+s) grid, lambda=0")
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--a-min", type=float, default=-2.0)
    p.add_argument("--a-max", type=float, default=0.9)
    p.add_argument("--a-points", type=int, default=20)
    p.add_argument("--s-min", type=float, default=0.0, help="b - a, lower end")
    p.add_argument("--s-max", type=float, default=0.95)
    p.add_argument("--s-points", type=int, default=20)
    grid(p)
    jobs(p)
    out(p)

    p = sub.add_parser("spectrum", help="Poschl-Teller check and non-degeneracy verdict")
    point(p)
    grid(p)
    out(p)

    p = sub.add_parser("groundstate", help="constants, residuals and norms of the ground state")
    point(p)
    grid(p)
    out(p)

    p = sub.add_parser("gamma", help="Gamma(mu) = G(z_mu) over a mu grid")
    point(p, 0.3)
    grid(p)
    p.add_argument("--k", required=True, help="gaussian-bump:c,t0,s | rational:alpha,beta | tabulated:<path>")
    mus(p, 81)
    out(p)

    for name, helptext in (("reduce", "reduced energy Phi_eps(mu) table"), ("solve", "critical points of Phi_eps")):
        p = sub.add_parser(name, help=helptext)
        point(p, 0.3)
        grid(p)
        p.add_argument("--k", required=True)
        p.add_argument("--eps", type=_floats, default=[1e-2])
        mus(p, 81)
        jobs(p)
        out(p)

    p = sub.add_parser("selfcheck", help="run the invariant suite")
    out(p)
    return ap


def _grid(args) -> Grid | None:
    if args.L is None and args.n is None:
        return None
    return Grid(args.L if args.L is not None else DEFAULT_L, args.n if args.n is not None else DEFAULT_N)


# --- commands ----------------------------------------------------------------


def cmd_curves(args, o: Output) -> int:
    if args.a_points < 1:
        raise ParameterError("a-points ≥ 1", str(args.a_points))
    o.header("a", "j", "h_derived", "h_printed", "b_lower", "b_upper")
    for a in np.linspace(args.a_min, args.a_max, args.a_points):
        for j in args.j:
            c = cf.h_curve(j, float(a), args.lam, args.N)
            o.row(float(a), j, c.derived, c.printed, float(a), float(a) + 1)
    return EXIT_OK


def _region_row(task):
    a, b, N, grid = task
    rep = symmetry_breaking(a, b, N, grid)
    return rep


def cmd_regions(args, o: Output) -> int:
    grid = _grid(args)
    tasks = []
    for a in np.linspace(args.a_min, args.a_max, args.a_points):
        for s in np.linspace(args.s_min, args.s_max, args.s_points):
            constants(args.N, float(a), float(a + s), 0.0)  # validate up front
            tasks.append((float(a), float(a + s), args.N, grid))
    reps = _map(_region_row, tasks, args.jobs)
    o.header("a", "b", "lambda", "N", "breaks_symmetry", "curve_breaks", "agree", "mode1_bottom", "h1", "distance")
    disagree = 0
    for rep in reps:
        dist = abs(rep.b - rep.curve_b)
        if not rep.agree and dist > 1e-3:
            disagree += 1
        o.row(rep.a, rep.b, 0.0, rep.N, rep.breaks, rep.curve_breaks, rep.agree, rep.mode1_bottom, rep.curve_b, dist)
    o.comment(f"disagreements outside the 1e-3 band: {disagree}")
    return EXIT_CERTIFICATE if disagree else EXIT_OK


def cmd_spectrum(args, o: Output) -> int:
    dc = constants(args.N, args.a, args.b, args.lam)
    grid = _grid(args)
    pt = pt_spectrum_check(dc, grid)
    o.comment(f"Poschl-Teller: beta={fmt(dc.beta)} gamma={fmt(dc.gamma)} L={fmt(pt.grid.L)} n={pt.grid.n}")
    o.header("j", "nu_closed_form", "nu_numeric", "scaled_error")
    for j, (ex, num) in enumerate(zip(pt.closed_form, pt.numeric)):
        o.row(j, ex, num, abs(num - ex) / max(1.0, abs(ex)))
    o.comment(f"negative eigenvalues: {pt.negative_count} (expected {pt.expected_count}); min gap {fmt(pt.min_gap)}")
    o.comment(f"pt_match: {'pass' if pt.passed() else 'FAIL'}")
    nd = nondegenerate(dc, grid)
    o.comment(f"non-degenerate: {fmt(nd.verdict)} (mode-0 kernel dim {nd.mode0_kernel_dim}, kernel modes {nd.kernel_modes}, modes checked 0..{nd.i_max}, tol {fmt(nd.tol)})")
    for i, m in sorted(nd.margins.items()):
        o.comment(f"mode {i} margin {fmt(m)}")
    return EXIT_OK if pt.passed() else EXIT_CERTIFICATE


def cmd_groundstate(args, o: Output) -> int:
    dc = constants(args.N, args.a, args.b, args.lam)
    grid = _grid(args) or Grid()
    t = grid.t
    res = np.abs(cf.ode_residual(t, dc))
    scale = np.abs(cf.d2phi1(t, dc)) + dc.LambdaTilde * cf.phi1(t, dc)
    mask = scale > 1e-200
    ode = float(np.max(res[mask] / scale[mask]))

    def fd_residual(g: Grid) -> float:
        v = sample(lambda s: cf.phi1(s, dc), g).values
        d2 = np.diff(v, 2, prepend=0.0, append=0.0) / g.h**2
        r = -d2 + dc.LambdaTilde * v - v ** (dc.p - 1)
        return float(np.max(np.abs(r)))

    fd = fd_residual(grid)
    fd2 = fd_residual(grid.refined())
    norm_q = cf.norm_pb_p(dc)
    norm_x = cf.norm_pb_p_exact(dc)
    o.header("quantity", "value")
    for key, val in [
        ("p", dc.p), ("q", dc.q), ("LambdaTilde", dc.LambdaTilde), ("LambdaFour", dc.LambdaFour),
        ("beta", dc.beta), ("gamma", dc.gamma), ("omega", dc.omega),
        ("amplitude", cf.amplitude(dc)), ("amplitude_printed", cf.amplitude(dc, verbatim=True)),
        ("norm_pb_p_quadrature", norm_q), ("norm_pb_p_exact", norm_x),
        ("energy_f0", cf.energy_f0(dc)),
        ("ode_residual_max_relative", ode),
        ("fd_residual_h", fd), ("fd_residual_h_over_2", fd2), ("fd_ratio", fd / fd2),
    ]:
        o.row(key, val)
    for w in dc.warnings:
        o.comment(f"warning: {w}")
    ok = ode <= 1e-10 and abs(norm_q - norm_x) <= 1e-8 * norm_x
    o.comment(f"certificate: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CERTIFICATE


def _spec(args, dc) -> PerturbationSpec:
    return PerturbationSpec.parse(args.k, dc.N)


def _mu_grid(args) -> np.ndarray:
    if not (0 < args.mu_min < args.mu_max) or args.mu_points < 2:
        raise ParameterError("0 < mu-min < mu-max, mu-points ≥ 2", f"{args.mu_min}, {args.mu_max}, {args.mu_points}")
    return default_mu_grid(args.mu_min, args.mu_max, args.mu_points)


def _describe_k(o: Output, k: PerturbationSpec) -> None:
    rep = check_conditions(k)
    lap = "none" if k.laplacian0 is None else fmt(k.laplacian0)
    o.comment(f"k={k} k0={fmt(k.k0)} kinf={fmt(k.kinf)} laplacian0={lap}")
    o.comment(f"conditions: {', '.join(rep.holds) or 'none'}; {rep.prediction}")


def cmd_gamma(args, o: Output) -> int:
    dc = constants(args.N, args.a, args.b, args.lam)
    k = _spec(args, dc)
    grid = _grid(args)
    _describe_k(o, k)
    o.comment(f"Gamma0={fmt(Gamma0(k, dc))}")
    if k.laplacian0 is not None:
        o.comment(f"Gamma2_0={fmt(Gamma2_0(k, dc))}")
    o.header("mu", "gamma")
    for mu in _mu_grid(args):
        o.row(mu, Gamma(float(mu), k, dc, grid))
    return EXIT_OK


def _profile_task(task):
    dc, k, grid, eps, mus = task
    return ReducedProblem(dc, k, grid).profile(eps, mus)


def cmd_reduce(args, o: Output) -> int:
    dc = constants(args.N, args.a, args.b, args.lam)
    k = _spec(args, dc)
    grid = _grid(args)
    mus = _mu_grid(args)
    ReducedProblem(dc, k, grid, eps_max=math.inf)  # degeneracy refusal before any work
    _check_eps(args.eps)
    _describe_k(o, k)
    tables = _map(_profile_task, [(dc, k, grid, eps, mus) for eps in args.eps], args.jobs)
    o.header("eps", *PROFILE_COLUMNS)
    failed = 0
    for eps, rows in zip(args.eps, tables):
        for r in rows:
            failed += not r["ok"]
            o.row(eps, *(r[c] for c in PROFILE_COLUMNS))
    if failed:
        o.comment(f"{failed} rows did not converge")
        return EXIT_CONVERGENCE
    return EXIT_OK


def _critical_task(task):
    dc, k, grid, eps, mus = task
    found, _ = ReducedProblem(dc, k, grid).critical_points(eps, mus)
    return found


def cmd_solve(args, o: Output) -> int:
    dc = constants(args.N, args.a, args.b, args.lam)
    k = _spec(args, dc)
    grid = _grid(args)
    mus = _mu_grid(args)
    _check_eps(args.eps)
    ReducedProblem(dc, k, grid)
    _describe_k(o, k)
    results = _map(_critical_task, [(dc, k, grid, eps, mus) for eps in args.eps], args.jobs)
    o.header("eps", "mu_star", "phi_value", "full_residual", "alpha", "kind", "certified")
    bad = 0
    for eps, found in zip(args.eps, results):
        if not found:
            o.comment(f"eps={fmt(eps)}: no interior extremum")
        for c in found:
            bad += not c.certified
            o.row(eps, c.mu_star, c.phi_value, c.full_residual, c.alpha, c.kind, c.certified)
    return EXIT_CERTIFICATE if bad else EXIT_OK


def _check_eps(eps_list):
    for e in eps_list:
        if not math.isfinite(e) or abs(e) > 0.1:
            raise ParameterError("|eps| ≤ 0.1", f"eps={e}")


def cmd_selfcheck(args, o: Output) -> int:
    from .selfcheck import run

    checks = run()
    o.header("check", "result", "detail")
    for c in checks:
        o.row(c.name, "pass" if c.passed else "FAIL", c.detail)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CERTIFICATE


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))  # map preserves input order


COMMANDS = {
    "curves": cmd_curves,
    "regions": cmd_regions,
    "spectrum": cmd_spectrum,
    "groundstate": cmd_groundstate,
    "gamma": cmd_gamma,
    "reduce": cmd_reduce,
    "solve": cmd_solve,
    "selfcheck": cmd_selfcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    o = Output(args, echo_command(args))
    try:
        code = COMMANDS[args.command](args, o)
    except (ParameterError, PerturbationParseError, DegenerateManifoldError) as exc:
        print(f"cknpert {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except ConvergenceError as exc:
        print(f"cknpert {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    o.flush(args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
