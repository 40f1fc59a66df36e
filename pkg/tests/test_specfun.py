import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, special

from polarmom import specfun
from polarmom.specfun import CylKind, RingInterval

J, H = CylKind.BESSEL_J, CylKind.HANKEL2


def quad_complex(f, a, b, points=None):
    """Reference integral of a complex function with scipy's adaptive rule."""
    kw = dict(epsabs=0.0, epsrel=1e-13, limit=400, points=points)
    re = integrate.quad(lambda t: f(t).real, a, b, **kw)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, **kw)[0]
    return re + 1j * im


def quad_ring(kind, n, a, b, k, weight=True):
    fn = special.jv if kind is J else (lambda m, z: special.hankel2(m, z))
    return quad_complex(lambda r: (r if weight else 1.0) * fn(n, k * r), a, b)


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# cylinder functions


def test_cyl_fn_examples():
    assert specfun.cyl_fn(J, 0, 0.0) == 1.0
    assert specfun.cyl_fn(J, 1, 1.0) == pytest.approx(float(mpmath.besselj(1, 1)), rel=1e-15)
    assert specfun.cyl_fn(J, 1, 1.0) == pytest.approx(0.4400505857, abs=1e-10)
    for x in (0.3, 2.0, 17.5):
        assert specfun.cyl_fn(J, -3, x) == pytest.approx(-specfun.cyl_fn(J, 3, x), rel=1e-15)


def test_cyl_fn_domain_errors():
    with pytest.raises(ValueError):
        specfun.cyl_fn(H, 0, 0.0)
    with pytest.raises(ValueError):
        specfun.cyl_fn(J, 1, np.nan)
    with pytest.raises(ValueError):
        specfun.cyl_fn(J, 1, np.inf)


def test_hankel_is_j_minus_jy():
    x = np.linspace(0.1, 40, 50)
    for n in (0, 1, 7, 30):
        h = specfun.cyl_fn(H, n, x)
        np.testing.assert_allclose(h, special.jv(n, x) - 1j * special.yv(n, x), rtol=1e-14)


def test_cyl_fn_complex_argument_against_mpmath():
    z = 3.0 - 0.4j
    for n in (0, 2, 9):
        ref = complex(mpmath.besselj(n, z) - 1j * mpmath.bessely(n, z))
        assert rel(specfun.cyl_fn(H, n, z), ref) < 1e-12


@given(n=st.integers(0, 64), x=st.floats(1e-3, 100.0), kind=st.sampled_from([J, H]))
def test_reflection(n, x, kind):
    pos = specfun.cyl_fn(kind, n, x)
    neg = specfun.cyl_fn(kind, -n, x)
    assume(np.isfinite(pos) and pos != 0)
    assert neg == pytest.approx((-1) ** n * pos, rel=1e-13)


@given(n=st.integers(0, 48), x=st.floats(0.1, 50.0))
def test_wronskian(n, x):
    def y(m):
        return (1j * (specfun.cyl_fn(H, m, x) - specfun.cyl_fn(J, m, x))).real

    w = specfun.cyl_fn(J, n, x) * y(n + 1) - specfun.cyl_fn(J, n + 1, x) * y(n)
    assert w == pytest.approx(-2 / (math.pi * x), rel=1e-10)


def test_scaled_bessel_tables_extreme_orders():
    # the scaled tables must survive orders where J underflows and Y overflows
    x = 0.02
    jt = np.ravel(specfun.scaled_j(160, x))
    ht = np.ravel(specfun.scaled_h2(160, x))
    for n in (0, 5, 80, 160):
        ls = float(specfun.log_scale(n, x, 1.0))
        ref_j = mpmath.besselj(n, x)
        ref_y = mpmath.bessely(n, x)
        assert rel(complex(jt[n]), complex(ref_j / mpmath.exp(ls))) < 1e-12
        assert rel(complex(ht[n]), complex((ref_j - 1j * ref_y) * mpmath.exp(ls))) < 1e-12


# ---------------------------------------------------------------------------
# Struve functions


def test_struve_examples():
    assert specfun.struve(0, 0.0) == 0.0
    assert specfun.struve(1, 0.0) == 0.0
    ref = (2 / math.pi) * integrate.quad(lambda t: math.sin(math.cos(t)), 0, math.pi / 2, epsabs=1e-15)[0]
    assert specfun.struve(0, 1.0) == pytest.approx(ref, rel=1e-13)
    assert specfun.struve(0, 1.0) == pytest.approx(0.568656, abs=1e-6)


def test_struve_range_error():
    with pytest.raises(specfun.SpecfunRangeError, match="asymptotic"):
        specfun.struve(0, 61.0)
    # inside the bound but past the point where the series cancels 6 digits
    with pytest.raises(specfun.SpecfunRangeError, match="asymptotic"):
        specfun.struve(0, 30.0)
    with pytest.raises(ValueError):
        specfun.struve(2, 1.0)


@given(u=st.floats(-60.0, 60.0), order=st.sampled_from([0, 1]))
def test_struve_matches_scipy_or_refuses(u, order):
    try:
        val = specfun.struve(order, u)
    except specfun.SpecfunRangeError:
        assert abs(u) > 15
        return
    assert val == pytest.approx(special.struve(order, u), rel=1e-9, abs=1e-9)


@given(u=st.floats(1e-3, 2.0), order=st.sampled_from([0, 1]))
def test_struve_partial_sums_bracket(u, order):
    limit = specfun.struve(order, u)
    total, sign = 0.0, 1.0
    for k in range(12):
        if order == 0:
            term = (u / 2) ** (2 * k + 1) / math.gamma(k + 1.5) ** 2
        else:
            term = (u / 2) ** (2 * k + 2) / (math.gamma(k + 1.5) * math.gamma(k + 2.5))
        total += sign * term
        # even partial sums overshoot, odd ones undershoot (up to a few ulps of roundoff)
        assert sign * (total - limit) >= -8 * np.finfo(float).eps * abs(limit)
        sign = -sign


def test_struve_complex_argument():
    z = 1.5 - 0.3j
    ref = complex(mpmath.struveh(0, z))
    assert rel(specfun.struve(0, z), ref) < 1e-12


# ---------------------------------------------------------------------------
# closed-form integrals


def test_integral_rho_g0_examples():
    assert specfun.integral_rho_g0(J, RingInterval(0.0, 1.0, 1.0)) == pytest.approx(special.j1(1.0), rel=1e-14)
    assert specfun.integral_rho_g0(J, RingInterval(0.4, 0.4, 1.0)) == 0
    assert specfun.integral_rho_g0(H, RingInterval(0.4, 0.4, 1.0)) == 0


def test_integral_rho_g0_hankel_origin_limit():
    # int_0^eps rho H0 = (eps) H1(eps) - 2j/pi; the lower-endpoint term is exactly 2j/pi
    for eps in (1e-1, 1e-2, 1e-3):
        val = specfun.integral_rho_g0(H, RingInterval(0.0, eps, 1.0))
        ref = quad_complex(lambda r: r * special.hankel2(0, r), 0.0, eps)
        assert rel(val, ref) < 1e-10
        upper_term = eps * special.hankel2(1, eps)
        assert val - upper_term == pytest.approx(-2j / math.pi, abs=1e-14)
    assert abs(specfun.integral_rho_g0(H, RingInterval(0.0, 1e-6, 1.0))) < 1e-10


def test_other_closed_forms():
    x = 2.7
    assert specfun.integral_g1(J, RingInterval(0.0, x, 1.0)) == pytest.approx(1 - special.j0(x), rel=1e-14)
    k = 2 * math.pi
    val = specfun.integral_rho_g1(J, RingInterval(0.1, 0.3, k))
    assert rel(val, quad_ring(J, 1, 0.1, 0.3, k)) < 1e-10
    assert specfun.integral_g0(J, RingInterval(0.0, 0.0, 1.0)) == 0
    for kind in (J, H):
        iv = RingInterval(0.2, 1.3, 3.0)
        assert rel(specfun.integral_g0(kind, iv), quad_ring(kind, 0, 0.2, 1.3, 3.0, weight=False)) < 1e-10
        assert rel(specfun.integral_rho_g1(kind, iv), quad_ring(kind, 1, 0.2, 1.3, 3.0)) < 1e-10
        assert rel(specfun.integral_g1(kind, iv), quad_ring(kind, 1, 0.2, 1.3, 3.0, weight=False)) < 1e-10


def test_closed_forms_propagate_struve_range():
    with pytest.raises(specfun.SpecfunRangeError):
        specfun.integral_g0(J, RingInterval(0.0, 100.0, 1.0))


# ---------------------------------------------------------------------------
# ring integrals


def test_ring_integral_examples():
    iv = RingInterval(0.3, 0.9, 2.0)
    assert specfun.ring_integral(J, 0, iv) == pytest.approx(specfun.integral_rho_g0(J, iv), rel=1e-14)
    k = 2 * math.pi
    assert rel(specfun.ring_integral(J, 5, RingInterval(0.3, 0.4, k)), quad_ring(J, 5, 0.3, 0.4, k)) < 1e-9


def test_ring_integral_high_order_hankel_asymptotic_regime():
    k = 2 * math.pi
    iv = RingInterval(0.01, 0.02, k)
    assert specfun.in_asymptotic_regime(40, iv)
    exact = specfun.ring_integral(H, 40, iv)
    asym = specfun.asymptotic_ring_integral(H, 40, iv)
    assert rel(asym, exact) < 0.01
    assert rel(exact, quad_ring(H, 40, 0.01, 0.02, k)) < 1e-8
    diag = specfun.Diagnostics()
    via_switch = specfun.ring_integral(H, 40, iv, use_asymptotic=True, diagnostics=diag)
    assert via_switch == asym and diag.asymptotic_used == 1


def test_ring_integral_hankel_divergence_at_origin():
    with pytest.raises(ValueError):
        specfun.ring_integral(H, 2, RingInterval(0.0, 0.1, 1.0))
    with pytest.raises(ValueError):
        specfun.ring_integral(J, -1, RingInterval(0.0, 0.1, 1.0))
    # orders 0 and 1 have finite origin limits
    for n in (0, 1):
        assert rel(specfun.ring_integral(H, n, RingInterval(0.0, 0.1, 5.0)), quad_ring(H, n, 0.0, 0.1, 5.0)) < 1e-9


def test_ring_integral_plain():
    k = 4.0
    for kind in (J, H):
        for n in (0, 1, 3, 8):
            assert rel(specfun.ring_integral_plain(kind, n, RingInterval(0.2, 0.9, k)),
                       quad_ring(kind, n, 0.2, 0.9, k, weight=False)) < 1e-9


def _interval(draw_lo, width, ku):
    return draw_lo, draw_lo + width


@given(kind=st.sampled_from([J, H]), n=st.integers(0, 48), ka=st.floats(0.1, 45.0),
       kw=st.floats(1e-3, 20.0), lossy=st.booleans())
def test_ring_integral_vs_quadrature(kind, n, ka, kw, lossy):
    k = 1.0 - (0.05j if lossy else 0.0)
    a, b = ka, ka + kw
    assume(abs(k) * b <= 50)
    val = specfun.ring_integral(kind, n, RingInterval(a, b, k))
    ref = quad_ring(kind, n, a, b, k)
    assert rel(val, ref) < 1e-8


@given(kind=st.sampled_from([J, H]), n=st.integers(0, 48),
       pts=st.lists(st.floats(0.05, 30.0), min_size=3, max_size=3, unique=True))
def test_ring_integral_additivity(kind, n, pts):
    a, b, c = sorted(pts)
    k = 1.0
    whole = specfun.ring_integral(kind, n, RingInterval(a, c, k))
    parts = specfun.ring_integral(kind, n, RingInterval(a, b, k)) + specfun.ring_integral(kind, n, RingInterval(b, c, k))
    assert rel(parts, whole) < 1e-10


def test_scaled_table_matches_scalar_entry_point():
    lo = np.array([0.0, 0.05, 0.3])
    hi = np.array([0.05, 0.3, 0.31])
    k = 25.0
    tj = specfun.ring_integrals_scaled(J, 30, lo, hi, k)
    th = specfun.ring_integrals_scaled(H, 30, lo, hi, k)
    for p in range(3):
        for n in (0, 1, 2, 13, 30):
            ref = specfun.ring_integral(J, n, RingInterval(lo[p], hi[p], k))
            assert rel(tj[p, n] * np.exp(specfun.log_scale(n, hi[p], k)), ref) < 1e-12
            if lo[p] == 0:
                if n >= 2:
                    assert np.isnan(th[p, n])
                continue
            ref = specfun.ring_integral(H, n, RingInterval(lo[p], hi[p], k))
            assert rel(th[p, n] * np.exp(-specfun.log_scale(n, lo[p], k)), ref) < 1e-12


# ---------------------------------------------------------------------------
# asymptotic forms


def _asym_j(n, x):
    return (math.e * x / (2 * n)) ** n / math.sqrt(2 * math.pi * n)


def _asym_y(n, x):
    return -math.sqrt(2 / (math.pi * n)) * (math.e * x / (2 * n)) ** (-n)


def test_asymptotic_zero_interval():
    assert specfun.asymptotic_ring_integral(J, 60, RingInterval(0.3, 0.3, 1.0)) == 0


def test_asymptotic_bessel_matches_model_integrand():
    iv = RingInterval(0.001, 0.002, 1.0)
    val = specfun.asymptotic_ring_integral(J, 30, iv)
    ref = integrate.quad(lambda r: r * _asym_j(30, r), 0.001, 0.002, epsabs=0, epsrel=1e-13)[0]
    assert rel(val, ref) < 1e-6


def test_asymptotic_hankel_dominated_by_neumann_term():
    iv = RingInterval(0.001, 0.002, 1.0)
    val = specfun.asymptotic_ring_integral(H, 30, iv)
    ref_y = integrate.quad(lambda r: r * _asym_y(30, r), 0.001, 0.002, epsabs=0, epsrel=1e-13)[0]
    assert rel(val, -1j * ref_y) < 1e-6
    assert abs(val.imag) > 1e100 * abs(val.real)


def test_asymptotic_hankel_order_two_log_branch():
    diag = specfun.Diagnostics()
    iv = RingInterval(0.001, 0.004, 1.0)
    val = specfun.asymptotic_ring_integral(H, 2, iv, diag)
    assert diag.log_branch == 1
    ref = quad_complex(lambda r: r * (_asym_j(2, r) - 1j * _asym_y(2, r)), 0.001, 0.004)
    assert rel(val, ref) < 1e-10


def test_asymptotic_agrees_with_exact_in_regime():
    k = 25.0
    for n in (12, 24, 64):
        iv = RingInterval(0.002, 0.004, k)
        assert specfun.in_asymptotic_regime(n, iv)
        for kind in (J, H):
            assert rel(specfun.asymptotic_ring_integral(kind, n, iv), specfun.ring_integral(kind, n, iv)) < 0.01


# ---------------------------------------------------------------------------
# addition theorem


def test_addition_terms_rule():
    assert specfun.addition_terms(2.0, 1.0, 3.0) == math.ceil(6.0) + 20
    assert specfun.addition_terms(2.0, 1.0, 3.0, tol=1e-12) > specfun.addition_terms(2.0, 1.0, 3.0)


def test_addition_series_ratio_aware(rng):
    k = 25.1327
    r = rng.uniform(0, 30 / k, 300)
    rp = rng.uniform(0, 30 / k, 300)
    d = rng.uniform(0, 2 * np.pi, 300)
    keep = np.abs(r - rp) >= 1e-3 * 2 * np.pi / k
    r, rp, d = r[keep], rp[keep], d[keep]
    exact = special.hankel2(0, k * np.sqrt(r * r + rp * rp - 2 * r * rp * np.cos(d)))
    series = specfun.h0_addition_series(k, r, rp, d, tol=1e-12)
    assert np.max(np.abs(series - exact) / np.abs(exact)) < 1e-8


def test_addition_series_origin_source():
    k = 3.0
    val = specfun.h0_addition_series(k, np.array([0.7]), np.array([0.0]), np.array([0.4]))
    assert rel(val[0], special.hankel2(0, k * 0.7)) < 1e-14
