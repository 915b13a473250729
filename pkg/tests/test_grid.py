import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import eigvalsh_tridiagonal

from cknpert import closed_form as cf
from cknpert.grid import (
    Grid,
    GridMismatchError,
    RadialProfile,
    StiffnessOperator,
    inner_h,
    lp_pb,
    norm_h,
    read_profile,
    sample,
    write_profile,
)


def test_default_grid():
    g = Grid()
    assert g.L == 40.0 and g.n == 8000
    assert g.h == pytest.approx(80 / 8001)
    assert g.t[0] == pytest.approx(-40 + g.h)
    assert g.t[-1] == pytest.approx(40 - g.h)


def test_refinement_nests_nodes():
    g = Grid(3.0, 11)
    f = g.refined()
    assert f.h == pytest.approx(g.h / 2)
    np.testing.assert_allclose(f.t[1::2], g.t, atol=1e-14)


def test_with_spacing_and_adapted():
    g = Grid.with_spacing(100.0, 0.05)
    assert g.h == pytest.approx(0.05, rel=1e-3)
    assert Grid.adapted([1.0, 2.0]) == Grid()
    wide = Grid.adapted([10.0])
    assert wide.L == pytest.approx(120.0, rel=1e-3)
    assert wide.h == pytest.approx(Grid().h, rel=1e-3)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(-1.0, 10)
    with pytest.raises(ValueError):
        Grid(1.0, 2)


def test_profile_arithmetic_and_mismatch():
    g = Grid(2.0, 9)
    u = sample(lambda t: t, g)
    v = sample(lambda t: 1.0, g)
    np.testing.assert_allclose((2 * u - v + (-u)).values, g.t - 1)
    with pytest.raises(GridMismatchError):
        u + RadialProfile.zeros(Grid(2.0, 11))
    with pytest.raises(ValueError):
        RadialProfile(g, np.full(9, np.nan))
    with pytest.raises(ValueError):
        RadialProfile(g, np.zeros(8))


def test_inner_product_is_stiffness_form(dc_nondeg):
    g = Grid(5.0, 50)
    rng = np.random.default_rng(1)
    u = RadialProfile(g, rng.normal(size=g.n))
    v = RadialProfile(g, rng.normal(size=g.n))
    S = StiffnessOperator(g, dc_nondeg.LambdaTilde)
    assert inner_h(u, v, dc_nondeg) == pytest.approx(dc_nondeg.omega * g.h * u.values @ S.matvec(v.values), rel=1e-12)
    assert inner_h(u, v, dc_nondeg) == pytest.approx(inner_h(v, u, dc_nondeg), rel=1e-14)
    assert norm_h(u, dc_nondeg) > 0


def test_inner_product_converges_to_integral(dc_std):
    # v = sech t: int v'^2 = 2/3, int v^2 = 2
    exact = dc_std.omega * (2 / 3 + dc_std.LambdaTilde * 2)
    errs = []
    for n in (400, 801):
        u = sample(lambda t: 1 / np.cosh(t), Grid(30.0, n))
        errs.append(abs(norm_h(u, dc_std) ** 2 - exact))
    assert errs[1] < errs[0] / 3.5


def test_lp_norm_of_ground_state(dc_lam):
    u = sample(lambda t: cf.phi1(t, dc_lam), Grid())
    assert lp_pb(u, dc_lam) ** dc_lam.p == pytest.approx(cf.norm_pb_p_exact(dc_lam), rel=1e-9)
    with pytest.raises(ValueError):
        lp_pb(u, dc_lam, 0.5)


def test_stiffness_solve_and_spectrum():
    g = Grid(4.0, 60)
    S = StiffnessOperator(g, 1.3)
    dense = np.diag(S.diag) + np.diag(S.off, 1) + np.diag(S.off, -1)
    rhs = np.random.default_rng(2).normal(size=g.n)
    np.testing.assert_allclose(S.solve_array(rhs), np.linalg.solve(dense, rhs), rtol=1e-10)
    ev = eigvalsh_tridiagonal(S.diag, S.off)
    np.testing.assert_allclose([S.dirichlet_eigenvalue(m) for m in (1, 2, 60)], ev[[0, 1, 59]], rtol=1e-10)
    u = sample(np.sin, g)
    np.testing.assert_allclose(S.solve(S.apply(u)).values, u.values, atol=1e-12)


@given(arrays(np.float64, 7, elements=st.floats(-1e300, 1e300, allow_subnormal=True)), st.floats(-1e3, 1e3))
def test_profile_csv_roundtrip_exact(tmp_path_factory, values, x):
    g = Grid(1.5, 7)
    path = tmp_path_factory.mktemp("csv") / "w.csv"
    write_profile(path, RadialProfile(g, values), {"x": x, "iters": 3})
    back, scalars = read_profile(path)
    assert back.grid == g
    assert np.array_equal(back.values, values)
    assert float(scalars["x"]) == x and scalars["iters"] == "3"


def test_profile_csv_header():
    text = write_profile(None, RadialProfile.zeros(Grid(1.0, 3)))
    assert text.splitlines()[0] == "# L=1.0 n=3 convention=t=ln(r)"
    assert text.splitlines()[1] == "t,value"
