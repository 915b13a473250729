import math

import numpy as np
import pytest

from cknpert import closed_form as cf
from cknpert.grid import Grid, RadialProfile, inner_h, norm_h, read_profile, sample
from cknpert.params import constants
from cknpert.perturbation import PerturbationSpec
from cknpert.reduction import (
    ConvergenceError,
    DegenerateManifoldError,
    G_functional,
    Gamma,
    Gamma0,
    Gamma2_0,
    Gamma2_0_fd,
    Phi,
    ReducedProblem,
    find_critical,
    phi_profile,
    solve_w,
    tangent,
)

BUMP = PerturbationSpec.gaussian_bump(1.0, 0.0, 1.0)
GRID = Grid()


@pytest.fixture(scope="module")
def rp(dc_nondeg):
    return ReducedProblem(dc_nondeg, BUMP)


# --- tangent and G ---------------------------------------------------------------


def test_tangent_normalized_and_directed(dc_nondeg):
    xi = tangent(1.0, dc_nondeg, GRID)
    assert inner_h(xi, xi, dc_nondeg) == pytest.approx(1.0, abs=1e-10)
    d = sample(lambda t: -cf.dphi1(t, dc_nondeg), GRID)
    np.testing.assert_allclose(xi.values, d.values / norm_h(d, dc_nondeg), atol=1e-14)
    # odd about t = 0 at mu = 1
    np.testing.assert_allclose(xi.values, -xi.values[::-1], atol=1e-12)


def test_tangent_against_difference_quotient(dc_nondeg):
    mu, delta = 2.0, 1e-5
    zp = sample(cf.GroundState(dc_nondeg, mu * (1 + delta)).profile, GRID)
    zm = sample(cf.GroundState(dc_nondeg, mu * (1 - delta)).profile, GRID)
    fd = (zp - zm) * (1 / (2 * delta * mu))
    xi = tangent(mu, dc_nondeg, GRID)
    np.testing.assert_allclose(xi.values, fd.values / norm_h(fd, dc_nondeg), atol=1e-9)


def test_G_trivial_cases(dc_nondeg):
    z = sample(lambda t: cf.phi1(t, dc_nondeg), GRID)
    one = PerturbationSpec.constant(1.0)
    assert G_functional(z, one, dc_nondeg) == pytest.approx(cf.norm_pb_p(dc_nondeg) / dc_nondeg.p, rel=1e-10)
    assert G_functional(RadialProfile.zeros(GRID), BUMP, dc_nondeg) == 0.0
    assert G_functional(-z, one, dc_nondeg) == 0.0


def test_gamma_constant_k_is_flat(dc_nondeg):
    k = PerturbationSpec.constant(2.0)
    ref = 2.0 * cf.norm_pb_p(dc_nondeg) / dc_nondeg.p
    for mu in (1e-3, 1.0, 1e3):
        assert Gamma(mu, k, dc_nondeg) == pytest.approx(ref, rel=1e-10)
    assert Gamma0(k, dc_nondeg) == pytest.approx(ref, rel=1e-12)


def test_gamma_tends_to_gamma0(dc_std):
    k = PerturbationSpec.rational(1.0, 0.0, 4)
    g0 = Gamma0(k, dc_std)
    gaps = [abs(Gamma(math.exp(-s), k, dc_std) - g0) for s in range(1, 9)]
    assert all(x > y for x, y in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-5 * g0


def test_gamma2_reference(dc_std):
    k = PerturbationSpec.rational(0.0, 1.0, 4)
    assert Gamma2_0(k, dc_std) == pytest.approx(32 * math.pi**2 / 3, rel=1e-12)
    assert Gamma2_0_fd(k, dc_std) == pytest.approx(Gamma2_0(k, dc_std), rel=1e-4)
    with pytest.raises(ValueError):
        Gamma2_0(PerturbationSpec.tabulated([1.0], [0.0], 0.0, 0.0, None), dc_std)


# --- solve ---------------------------------------------------------------------


def test_zero_eps_is_exact(rp, dc_nondeg):
    r = rp.solve(2.0, 0.0)
    assert r.w_norm == 0.0 and abs(r.alpha) <= 1e-10
    assert r.full_residual <= 1e-10
    # discrete manifold energy agrees with the continuum value up to O(h^2)
    assert r.phi_value == pytest.approx(cf.energy_f0(dc_nondeg), rel=1e-5)


@pytest.mark.parametrize("mu", [0.05, 1.0, 7.0])
def test_constraint_and_residuals(rp, mu):
    r = rp.solve(mu, 1e-2)
    assert abs(r.orthogonality) <= 1e-10
    assert r.grad_residual <= 1e-10
    assert r.newton_iters <= 6
    # full residual is the multiplier term
    assert r.full_residual == pytest.approx(abs(r.alpha), rel=1e-6, abs=1e-10)


def test_phi_first_order(rp, dc_nondeg):
    # Phi = f0 - eps Gamma + O(eps^2) on the discrete manifold
    mu, eps = 1.5, 1e-3
    r = rp.solve(mu, eps)
    dev = r.phi_value - (r.extras["base_energy"] - eps * rp.gamma_discrete(mu))
    assert abs(dev) < 20 * eps**2 * abs(r.extras["base_energy"])
    assert rp.gamma_discrete(mu) == pytest.approx(Gamma(mu, BUMP, dc_nondeg), rel=1e-5)


def test_phi_symmetric_for_even_kernel(rp):
    for s in (0.5, 2.0, 5.0):
        a = rp.solve(math.exp(s), 1e-2).phi_value
        b = rp.solve(math.exp(-s), 1e-2).phi_value
        assert a == pytest.approx(b, abs=1e-9)


def test_solve_errors(dc_nondeg, dc_std):
    with pytest.raises(DegenerateManifoldError):
        ReducedProblem(dc_std, BUMP)
    rp = ReducedProblem(dc_nondeg, BUMP, eps_max=0.05, max_iter=1)
    with pytest.raises(ValueError):
        rp.solve(1.0, 0.06)
    with pytest.raises(ValueError):
        rp.solve(0.0, 0.01)
    with pytest.raises(ConvergenceError) as exc:
        rp.solve(1.0, 0.05)
    assert exc.value.residual > 0


def test_failed_rows_flagged(dc_nondeg):
    rp = ReducedProblem(dc_nondeg, BUMP, max_iter=1)
    rows = rp.profile(0.05, [1.0])
    assert rows[0]["ok"] is False and rows[0]["newton_iters"] == -1 and math.isnan(rows[0]["phi"])


def test_result_serialization(rp, tmp_path):
    r = rp.solve(1.0, 1e-2)
    r.write(tmp_path / "w.csv")
    w, scalars = read_profile(tmp_path / "w.csv")
    assert np.array_equal(w.values, r.w.values)
    assert float(scalars["alpha"]) == r.alpha
    assert int(scalars["newton_iters"]) == r.newton_iters


def test_wrappers_agree(rp, dc_nondeg):
    r = solve_w(3.0, 1e-2, BUMP, dc_nondeg)
    assert r.phi_value == rp.solve(3.0, 1e-2).phi_value
    assert Phi(3.0, 1e-2, BUMP, dc_nondeg) == r.phi_value


# --- profiles and critical points ----------------------------------------------


def test_profile_columns(dc_nondeg):
    rows = phi_profile(0.0, BUMP, dc_nondeg, mu_grid=[0.1, 1.0, 10.0])
    energies = [r["phi"] for r in rows]
    assert max(energies) - min(energies) < 1e-10
    assert all(r["w_norm"] == 0 for r in rows)


def test_constant_k_has_no_extremum(dc_nondeg):
    assert find_critical(1e-2, PerturbationSpec.constant(1.0), dc_nondeg, points=21) == []


def test_bump_critical_point_at_center(dc_nondeg):
    k = PerturbationSpec.gaussian_bump(1.0, 0.5, 1.0)
    found = find_critical(1e-2, k, dc_nondeg, points=41)
    assert len(found) == 1
    cp = found[0]
    assert cp.kind == "min"  # Gamma peaks where Phi = f0 - eps Gamma dips
    assert math.log(cp.mu_star) == pytest.approx(0.5, abs=1e-5)
    assert cp.certified


def test_positive_laplacian_case(dc_nondeg):
    # k = r^2/(1+r^2)^2 is invariant under r -> 1/r, so the extremum sits at mu = 1
    k = PerturbationSpec.rational(0.0, 1.0, 4)
    found = find_critical(1e-2, k, dc_nondeg, points=41)
    assert len(found) == 1
    assert found[0].mu_star == pytest.approx(1.0, rel=1e-5)
    assert found[0].certified
