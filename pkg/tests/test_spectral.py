import cmath
import math

import numpy as np
import pytest

from cmcs3 import families, loop_algebra as la, spectral as sp
from cmcs3.errors import DomainError, PreconditionError


@pytest.fixture(scope="module")
def clifford_data():
    return families.clifford_spectral_data()


def test_data_normalization():
    # a is stored monic with b rescaled by sqrt(lead)
    data = sp.SpectralData(
        la.RealPolynomial(np.array([1.0, 0.0, 4.0])),
        la.RealPolynomial(np.array([0.0, 2.0])),
        1.0,
        -1.0,
    )
    assert np.allclose(data.a.coeffs, [0.25, 0.0, 1.0])
    assert np.allclose(data.b.coeffs, [0.0, 1.0])
    assert data.g == 1


def test_data_validation():
    lin = la.RealPolynomial(np.array([0.0, 1.0]))
    cubic = la.RealPolynomial(np.array([0.0, 0.0, 0.0, 1.0]))
    one = la.RealPolynomial(np.array([1.0]))
    with pytest.raises(PreconditionError):
        sp.SpectralData(cubic, one, 1.0, -1.0)  # odd degree a
    with pytest.raises(PreconditionError):
        sp.SpectralData(one, cubic, 1.0, -1.0)  # deg b > g+1
    with pytest.raises(PreconditionError):
        sp.SpectralData(one, one, 1.0, 1.0)  # coinciding marked points


def test_json_round_trip(revolution_quarter):
    back = sp.SpectralData.from_json(revolution_quarter.to_json())
    assert np.allclose(back.a.coeffs, revolution_quarter.a.coeffs)
    assert np.allclose(back.b.coeffs, revolution_quarter.b.coeffs)
    assert back.kappa0 == revolution_quarter.kappa0


def test_mean_curvature(clifford_data, revolution_quarter):
    assert abs(clifford_data.mean_curvature) < 1e-12
    assert abs(revolution_quarter.mean_curvature) < 1e-12
    data, _ = families.revolution_family(families.RevolutionParams(0.5, 0.25))
    assert abs(data.mean_curvature + 0.5) < 1e-12  # orientation-flipped


def test_branch_points(revolution_quarter):
    pts = sp.odd_branch_points(revolution_quarter)
    expect = sorted([0.5j, -0.5j, 1j, -1j], key=lambda z: (z.real, z.imag))
    assert len(pts) == 4
    assert np.max(np.abs(np.array(pts) - np.array(expect))) < 1e-8


def test_nu_real_positive(revolution_quarter):
    ks = np.linspace(-3.0, 3.0, 13)
    vals = sp.nu_real_positive(revolution_quarter, ks)
    assert np.min(vals) > 0.0
    assert np.max(np.abs(vals**2 - revolution_quarter.p(ks).real)) < 1e-10


def test_clifford_lnmu_closed_form(clifford_data):
    val, nu0 = sp.lnmu_at(clifford_data, 1.0)
    assert abs(val - 1j * math.pi) < 1e-10
    # general point of the closed form ln mu = 2 pi i (k/sqrt(2))/sqrt(k^2+1)
    k = 2.0
    expect = 2j * math.pi * (k / math.sqrt(2.0)) / math.sqrt(k * k + 1.0)
    val2, _ = sp.lnmu_at(clifford_data, k)
    assert abs(val2 - expect) < 1e-10


def test_lnmu_sheet_antisymmetry(revolution_quarter):
    k = 1.7
    v_pos, nu_pos = sp.lnmu_at(revolution_quarter, k, positive_real_branch=True)
    path = sp.safe_path(revolution_quarter, 0.9, k)
    nu_start = -sp.nu_real_positive(revolution_quarter, 0.9)
    seg_neg, _ = sp.integrate_dlnmu(revolution_quarter, path, nu_start=nu_start)
    seg_pos, _ = sp.integrate_dlnmu(
        revolution_quarter, path, nu_start=-nu_start
    )
    assert abs(seg_neg + seg_pos) < 1e-10


def test_revolution_lnmu_marked_point(revolution_quarter):
    val, _ = sp.lnmu_at(revolution_quarter, revolution_quarter.kappa0)
    # mu = -1 at the marked point: ln mu in pi i + 2 pi i Z
    assert abs(cmath.exp(2.0 * val) - 1.0) < 1e-9
    assert abs(cmath.exp(val) + 1.0) < 1e-9


def test_check_conditions_revolution(revolution_quarter):
    rep = sp.check_conditions(revolution_quarter)
    assert rep["A"] and rep["B"]["pass"] and rep["C"]["pass"]
    assert rep["residuals"]["B"] < 1e-9
    assert max(rep["residuals"]["C0"], rep["residuals"]["C1"]) < 1e-9


def test_check_conditions_failure():
    # detuned b no longer satisfies the marked-point condition
    data, b2 = families.revolution_family(families.RevolutionParams(0.0, 0.25))
    bad = sp.SpectralData(
        data.a,
        la.RealPolynomial(np.array([0.0, 1.1 * data.b.coeffs[1]])),
        data.kappa0,
        data.kappa1,
    )
    rep = sp.check_conditions(bad)
    assert not rep["C"]["pass"]


def test_delta_clifford(clifford_data):
    assert abs(sp.delta(clifford_data, 0.0) - 2.0) < 1e-10
    assert abs(sp.delta(clifford_data, 1.0) + 2.0) < 1e-10
    assert abs(sp.delta(clifford_data, -1.0) + 2.0) < 1e-10
    with pytest.raises(DomainError):
        sp.delta(clifford_data, 1j)


def test_delta_sheet_independence(revolution_quarter):
    val = sp.delta(revolution_quarter, 0.4, check_sheets=True)
    assert abs(val.imag) < 1e-10


def test_involution(revolution_quarter):
    pts = [0.7 + 0.2j, -1.3 + 0.5j, 0.1 - 0.8j]
    assert sp.involution_residual(revolution_quarter, pts) < 1e-9


def test_real_branch_points_clifford(clifford_data):
    report = sp.real_branch_points(clifford_data, window=(-3.0, 3.0))
    kappas = sorted(float(e.kappa.real) for e in report)
    assert np.allclose(kappas, [-1.0, 0.0, 1.0], atol=1e-8)
    by_k = {round(float(e.kappa.real)): e for e in report}
    assert abs(by_k[0].delta - 2.0) < 1e-8
    assert abs(by_k[1].delta + 2.0) < 1e-8
    assert abs(by_k[-1].delta + 2.0) < 1e-8


def test_real_branch_points_revolution(revolution_quarter):
    report = sp.real_branch_points(revolution_quarter, window=(-6.0, 6.0))
    doubles = [e for e in report if e.kind in ("double_point", "both")]
    kappas = sorted(float(e.kappa.real) for e in doubles)
    assert np.allclose(kappas, [-1.0, 1.0], atol=1e-7)


def test_g_invariant(clifford_data, revolution_quarter):
    g_c, det_c = sp.g_invariant(clifford_data)
    assert g_c == 2
    g_r, det_r = sp.g_invariant(revolution_quarter)
    assert g_r == 1
    assert det_r["real_double_points"] == 2


def test_weighted_genus_arithmetic():
    report = sp.BranchPointReport(
        [
            sp.BranchEntry(0.0, 2.0, 1, True, "double_point"),
            sp.BranchEntry(1.0, 0.3, 2, True, "b_root"),
            sp.BranchEntry(2.0, -2.0, 2, True, "both"),
        ]
    )
    # order 1 at Delta=2 -> 0; order 2 away from +-2 -> 2; order 2 at -2 -> 1
    assert sp.weighted_genus(report) == 3


def test_mobius_invariance(revolution_quarter):
    phi = 0.3
    tdata = sp.mobius_transform_data(revolution_quarter, phi)
    rep = sp.check_conditions(tdata)
    assert rep["A"] and rep["B"]["pass"] and rep["C"]["pass"]
    c, s = math.cos(phi), math.sin(phi)
    for k in (0.4, 2.2):
        mapped = (c * k - s) / (c + s * k)
        d0 = sp.delta(revolution_quarter, k)
        d1 = sp.delta(tdata, mapped)
        assert abs(d0 - d1) < 1e-9


def test_safe_path_endpoints(revolution_quarter):
    path = sp.safe_path(revolution_quarter, -2.0, 2.0)
    assert abs(path[0] + 2.0) < 1e-12
    assert abs(path[-1] - 2.0) < 1e-12
    branch = sp.odd_branch_points(revolution_quarter)
    for seg_start, seg_end in zip(path[:-1], path[1:]):
        for o in branch:
            assert sp._segment_distance(seg_start, seg_end, o) > 1e-3
