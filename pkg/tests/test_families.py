import math

import numpy as np
import pytest
import scipy.special as sps

from cmcs3 import families, loop_algebra as la
from cmcs3.errors import DomainError, PreconditionError


def test_elliptic_k_special_values():
    assert abs(families.elliptic_k(0.0) - math.pi / 2.0) < 1e-15
    for m in (0.1, 0.5, 0.64, 0.9, 0.9999):
        assert abs(families.elliptic_k(m) - sps.ellipk(m)) < 1e-13


def test_jacobi_against_scipy():
    for m in (0.0, 0.25, 0.64, 0.96):
        for u in np.linspace(-6.0, 6.0, 41):
            sn, cn, dn = families.jacobi_sn_cn_dn(u, m)
            sn_r, cn_r, dn_r, _ = sps.ellipj(u, m)
            assert abs(sn - sn_r) < 5e-13
            assert abs(cn - cn_r) < 5e-13
            assert abs(dn - dn_r) < 5e-13


def test_jacobi_quarter_period():
    m = 0.5
    k = families.elliptic_k(m)
    sn, cn, dn = families.jacobi_sn_cn_dn(k, m)
    assert abs(sn - 1.0) < 1e-12
    assert abs(cn) < 1e-12
    assert abs(dn - math.sqrt(1.0 - m)) < 1e-12


def test_jacobi_periodicity():
    m = 0.64
    k = families.elliptic_k(m)
    for u in (0.3, 1.1):
        dn0 = families.jacobi_dn(u, m)
        dn1 = families.jacobi_dn(u + 2.0 * k, m)
        assert abs(dn0 - dn1) < 1e-12


def test_delaunay_params_validation():
    with pytest.raises(PreconditionError):
        families.DelaunayParams(-0.1, 0.5)
    p = families.DelaunayParams(0.3, 0.5)
    assert abs(p.m - 0.64) < 1e-15


def test_delaunay_v_round_cylinder():
    p = families.DelaunayParams(0.5, 0.5)
    for x in np.linspace(-2.0, 2.0, 9):
        assert abs(families.delaunay_v(x, p) - 1.0) < 1e-14


def test_delaunay_v_sech_limit():
    # as a_r -> 0 the profile degenerates to 2 b_r sech(2 b_r x)
    p = families.DelaunayParams(0.01, 0.5)
    for x in np.linspace(-1.5, 1.5, 7):
        ref = 2.0 * p.b_r / math.cosh(2.0 * p.b_r * x)
        assert abs(families.delaunay_v(x, p) - ref) < 2e-3


def test_delaunay_v_prime_fd(delaunay_params):
    h = 1e-6
    for x in (0.0, 0.4, 1.1):
        fd = (
            families.delaunay_v(x + h, delaunay_params)
            - families.delaunay_v(x - h, delaunay_params)
        ) / (2.0 * h)
        assert abs(families.delaunay_v_prime(x, delaunay_params) - fd) < 1e-8


def test_delaunay_period(delaunay_params):
    per = families.delaunay_period(delaunay_params)
    v0 = families.delaunay_v(0.123, delaunay_params)
    v1 = families.delaunay_v(0.123 + per, delaunay_params)
    assert abs(v0 - v1) < 1e-12


def test_delaunay_zeta_spectrum(delaunay_xi, delaunay_params):
    # the moving polynomial stays traceless and isospectral to the initial value
    a0 = np.asarray(la.det_polynomial(delaunay_xi)[0])
    for x in (0.0, 0.37, 0.9):
        for lam in np.exp(1j * np.linspace(0.2, 5.8, 4)):
            z = families.delaunay_zeta(x, lam, delaunay_params)
            assert abs(z[0, 0] + z[1, 1]) < 1e-12
            det_expect = -np.polynomial.polynomial.polyval(lam, a0) / lam
            assert abs(np.linalg.det(z) - det_expect) < 1e-12


def test_delaunay_zeta_at_origin(delaunay_xi, delaunay_params):
    # at the base point the printed polynomial reduces to the initial value
    for lam in (1.0 + 0j, np.exp(0.7j)):
        z = families.delaunay_zeta(0.0, lam, delaunay_params)
        ref = la.evaluate(delaunay_xi, complex(lam))
        assert np.max(np.abs(z - ref)) < 1e-12


def test_sphere_closed_forms():
    xi = families.sphere_xi()
    for lam in (1.0 + 0j, np.exp(0.5j)):
        z0 = families.sphere_zeta(0.0, lam)
        assert np.max(np.abs(z0 - la.evaluate(xi, complex(lam)))) < 1e-14
    f0 = families.sphere_frame(0.0, np.array([1.0 + 0j]))[0]
    assert np.max(np.abs(f0 - np.eye(2))) < 1e-14
    assert abs(families.sphere_u(0.0)) < 1e-15
    assert abs(families.sphere_u(1.0) + math.log(2.0)) < 1e-15


def test_flat_xi_rejects_collision():
    with pytest.raises(DomainError):
        families.flat_xi(0.0)


def test_flat_marked_points():
    _, marked = families.flat_xi(math.pi / 6)
    assert abs(marked.lam0 - np.exp(1j * math.pi / 3)) < 1e-12
    assert abs(marked.mean_curvature - 1.0 / math.tan(math.pi / 3)) < 1e-10


def test_clifford_periods():
    w1, w2 = families.clifford_periods()
    assert abs(w1 - math.pi * math.sqrt(2.0)) < 1e-15
    assert abs(w2 - 1j * math.pi * math.sqrt(2.0)) < 1e-15


def test_revolution_family_minimal():
    data, b2 = families.revolution_family(families.RevolutionParams(0.0, 0.25))
    assert abs(data.kappa0 - 1.0) < 1e-12
    assert abs(data.kappa1 + 1.0) < 1e-12
    assert abs(b2 - math.sqrt(2.0 / (4.0 * 1.25))) < 1e-12
    assert np.allclose(data.a.coeffs, [0.25, 0.0, 1.0])
    assert np.allclose(data.b.coeffs, [0.0, b2 * 0.75])


def test_revolution_params_validation():
    with pytest.raises(PreconditionError):
        families.RevolutionParams(-1.0, 0.25)
    with pytest.raises(DomainError):
        families.RevolutionParams(0.0, 1.0)


def test_revolution_marked_point_formula():
    for h in (0.0, 0.5, 2.0):
        data, _ = families.revolution_family(families.RevolutionParams(h, 0.25))
        k0 = data.kappa0
        assert abs(k0 - (h + math.sqrt(h * h + 1.0))) < 1e-12
        # oriented mean curvature of the stored pair is -H (orientation flip)
        hm = (1.0 + data.kappa0 * data.kappa1) / (data.kappa0 - data.kappa1)
        assert abs(hm + h) < 1e-12


def test_genus0_closing_clifford():
    (m, n), (rm, rn) = families.genus0_closing(1.0, 1.0 / math.sqrt(2.0), 0.0)
    assert (m, n) == (1, 1)
    assert rm < 1e-12 and rn < 1e-12


def test_genus0_closing_rejects_zero():
    with pytest.raises(DomainError):
        families.genus0_closing(0.0, 1.0, 0.0)


def test_clifford_spectral_data():
    data = families.clifford_spectral_data()
    assert data.g == 0
    assert np.allclose(data.a.coeffs, [1.0])
    assert np.allclose(data.b.coeffs, [1.0 / math.sqrt(2.0)])
    assert (data.kappa0, data.kappa1) == (1.0, -1.0)
