import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cknpert.perturbation import PerturbationParseError, PerturbationSpec, check_conditions

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_gaussian_values():
    k = PerturbationSpec.gaussian_bump(2.0, 1.0, 0.5)
    assert k(math.e) == pytest.approx(2.0)
    assert k.on_cylinder(1.5) == pytest.approx(2.0 * math.exp(-1.0))
    assert (k.k0, k.kinf, k.laplacian0) == (0.0, 0.0, 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 5))
def test_rational_matches_direct_formula(alpha, beta, t):
    k = PerturbationSpec.rational(alpha, beta, 4)
    r = math.exp(t)
    assert k.on_cylinder(t) == pytest.approx((alpha + beta * r * r) / (1 + r * r) ** 2, rel=1e-12, abs=1e-14)


def test_rational_far_field_finite():
    k = PerturbationSpec.rational(1.0, 2.0, 4)
    with np.errstate(over="raise"):
        v = k.on_cylinder(np.array([-800.0, 800.0]))
    assert v[0] == pytest.approx(1.0) and v[1] == 0.0


@pytest.mark.parametrize("alpha, beta, N", [(0, 1, 4), (1, 0, 4), (0.5, -2, 3), (1, 3, 6)])
def test_rational_metadata_against_expansion(alpha, beta, N):
    # radial k = k0 + c r^2 + ..., Laplacian at 0 is 2 N c
    k = PerturbationSpec.rational(alpha, beta, N)
    r = 1e-4
    c = (k(r) - k(r * 0.5)) / (0.75 * r * r)
    assert k.laplacian0 == pytest.approx(2 * N * c, rel=1e-6, abs=1e-8)
    assert k.k0 == pytest.approx(float(k(1e-9)))
    assert k.kinf == pytest.approx(float(k(1e9)), abs=1e-12)


@given(st.sampled_from(["gaussian-bump", "rational"]), st.lists(finite, min_size=3, max_size=3))
def test_parse_roundtrip(kind, vals):
    if kind == "gaussian-bump":
        vals[2] = abs(vals[2]) + 1e-3
        text = f"{kind}:{vals[0]!r},{vals[1]!r},{vals[2]!r}"
    else:
        text = f"{kind}:{vals[0]!r},{vals[1]!r}"
    k = PerturbationSpec.parse(text, 4)
    again = PerturbationSpec.parse(str(k), 4)
    assert again.args == k.args
    assert (again.k0, again.kinf, again.laplacian0) == (k.k0, k.kinf, k.laplacian0)


@pytest.mark.parametrize(
    "text", ["gaussian-bump:1,0", "rational:1", "rational:a,b", "sine:1,2", "gaussian-bump", "gaussian-bump:1,0,0"]
)
def test_parse_errors(text):
    with pytest.raises(PerturbationParseError):
        PerturbationSpec.parse(text, 4)


def test_tabulated_file(tmp_path):
    path = tmp_path / "k.csv"
    r = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
    path.write_text("# k0=3 kinf=1 laplacian0=-2\nr,k\n" + "".join(f"{float(x)!r},{float(3 - 2 * x / (1 + x))!r}\n" for x in r))
    k = PerturbationSpec.parse(f"tabulated:{path}", 4)
    assert (k.k0, k.kinf, k.laplacian0) == (3.0, 1.0, -2.0)
    np.testing.assert_allclose(k(r), 3 - 2 * r / (1 + r), rtol=1e-14)
    # monotone data stays monotone between nodes, constant outside
    dense = k(np.logspace(-3, 3, 200))
    assert np.all(np.diff(dense) <= 1e-15)
    assert k(1e-3) == k(0.1) and k(1e3) == k(10.0)
    assert str(k) == f"tabulated:{path}"


def test_tabulated_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n")
    with pytest.raises(PerturbationParseError):
        PerturbationSpec.from_file(bad)
    with pytest.raises(PerturbationParseError):
        PerturbationSpec.tabulated([2.0, 1.0], [0.0, 0.0], 0.0, 0.0)


def test_constant():
    k = PerturbationSpec.constant(2.5)
    np.testing.assert_array_equal(k.on_cylinder(np.array([-50.0, 0.0, 50.0])), 2.5)
    assert check_conditions(k).holds == []


def test_conditions():
    g = check_conditions(PerturbationSpec.gaussian_bump(1, 0, 1))
    assert g.holds == ["vanishing-ends"]
    r01 = check_conditions(PerturbationSpec.rational(0, 1, 4))
    assert r01.positive_laplacian and not r01.negative_laplacian
    r10 = check_conditions(PerturbationSpec.rational(1, 0, 4))
    assert r10.holds == [] and r10.prediction == "no prediction"
    neg = check_conditions(PerturbationSpec.tabulated([1.0], [0.0], 0.0, 1.0, -1.0))
    assert neg.negative_laplacian and "minimum" in neg.prediction
