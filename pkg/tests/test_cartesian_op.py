import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import crandn
from polarmom import cartesian_op, oracle
from polarmom.cartesian_op import (KernelCheckError, apply_potential_2d, build_kernel, cell_coefficients,
                                   count_mults_2d)
from polarmom.model import CartesianGrid
from polarmom.polar_op import count_mults_1d


@pytest.fixture(scope="module")
def grid16(lam):
    return CartesianGrid.centered(16, 16, lam / 20)


@pytest.fixture(scope="module")
def kernel16(grid16, kb):
    return build_kernel(grid16, kb)


def _disk_reference(k, a, d):
    """(-j/4) int_disk H_0(k |r - p|) dA, |p| = d, via scipy dblquad in polar coordinates."""
    def part(fn):
        if d == 0:
            v = integrate.quad(lambda r: 2 * math.pi * r * fn(special.hankel2(0, k * r)), 0, a,
                               epsabs=0, epsrel=1e-13, limit=200)[0]
        else:
            v = integrate.dblquad(
                lambda t, r: r * fn(special.hankel2(0, k * math.sqrt(d * d + r * r - 2 * d * r * math.cos(t)))),
                0, a, 0, 2 * math.pi, epsabs=0, epsrel=1e-11)[0]
        return v
    return -0.25j * (part(np.real) + 1j * part(np.imag))


def test_self_entry_vs_quadrature(lam, kb):
    delta = lam / 20
    self_term, _ = cell_coefficients(delta, kb)
    ref = _disk_reference(kb, delta / math.sqrt(math.pi), 0.0)
    assert abs(self_term - ref) / abs(ref) <= 1e-6


def test_neighbour_entry_vs_quadrature(lam, kb):
    delta = lam / 20
    _, off = cell_coefficients(delta, kb)
    ref = _disk_reference(kb, delta / math.sqrt(math.pi), delta)
    assert abs(off * special.hankel2(0, kb * delta) - ref) / abs(ref) <= 1e-6


@pytest.mark.parametrize("cells_per_lam", [20, 50])
def test_far_cell_approaches_point_sample(lam, kb, cells_per_lam):
    delta = lam / cells_per_lam
    _, off = cell_coefficients(delta, kb)
    rho = 30 * delta
    point = delta ** 2 * (-0.25j) * special.hankel2(0, kb * rho)
    err = abs(off * special.hankel2(0, kb * rho) - point) / abs(point)
    # the disk average differs from a point sample by (k delta)^2 / (8 pi) to leading order
    assert err == pytest.approx((kb.real * delta) ** 2 / (8 * math.pi), rel=1e-2)
    if cells_per_lam >= 50:
        assert err < 1e-3


def test_wrong_constants_fail_the_build_check(monkeypatch, lam, kb):
    good = cartesian_op.cell_coefficients
    monkeypatch.setattr(cartesian_op, "cell_coefficients", lambda d, k: (good(d, k)[0] * 1.01, good(d, k)[1]))
    with pytest.raises(KernelCheckError):
        build_kernel(CartesianGrid.centered(4, 4, lam / 20), kb)


def test_kernel_layout_and_symmetry(kernel16, grid16, kb):
    g = kernel16.g
    assert g.shape == (32, 32)
    assert kernel16.a_eq == pytest.approx(grid16.delta / math.sqrt(math.pi))
    i = (-np.arange(32)) % 32
    np.testing.assert_allclose(g[np.ix_(i, i)], g, rtol=1e-15)
    _, off = cell_coefficients(grid16.delta, kb)
    assert g[3, 30] == pytest.approx(off * special.hankel2(0, kb * grid16.delta * math.hypot(3, 2)), rel=1e-14)


def test_kernel_does_not_depend_on_object(grid16, kb, kernel16):
    again = build_kernel(grid16, kb, self_check=False)
    np.testing.assert_array_equal(again.g, kernel16.g)


def test_zero_source(kernel16, grid16):
    assert not np.any(apply_potential_2d(np.zeros(grid16.shape, dtype=complex), kernel16))


def test_impulse_gives_translated_kernel(kernel16, grid16):
    p, q = 5, 9
    src = np.zeros(grid16.shape, dtype=complex)
    src[p, q] = 1.0
    out = apply_potential_2d(src, kernel16)
    i = np.arange(16)
    want = kernel16.g[np.ix_((i - p) % 32, (i - q) % 32)]
    np.testing.assert_allclose(out, want, rtol=1e-12, atol=1e-12 * np.abs(want).max())


def test_fft_matches_dense_sum(kernel16, grid16, kb, rng):
    src = crandn(rng, grid16.shape)
    dense = (oracle.dense_cartesian_matrix(grid16, kb) @ src.ravel()).reshape(grid16.shape)
    assert oracle.relative_error(dense, apply_potential_2d(src, kernel16)) < 1e-12


def test_fft_matches_dense_sum_rectangular(lam, kb, rng):
    grid = CartesianGrid.centered(7, 12, lam / 15)
    src = crandn(rng, grid.shape)
    dense = (oracle.dense_cartesian_matrix(grid, kb) @ src.ravel()).reshape(grid.shape)
    assert oracle.relative_error(dense, apply_potential_2d(src, build_kernel(grid, kb))) < 1e-12


@given(alpha=st.complex_numbers(max_magnitude=10), seed=st.integers(0, 2 ** 32 - 1))
def test_linearity(kernel16, grid16, alpha, seed):
    r = np.random.default_rng(seed)
    f, g = crandn(r, grid16.shape), crandn(r, grid16.shape)
    lhs = apply_potential_2d(alpha * f + g, kernel16)
    rhs = alpha * apply_potential_2d(f, kernel16) + apply_potential_2d(g, kernel16)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


@given(sx=st.integers(0, 3), sy=st.integers(0, 3), seed=st.integers(0, 2 ** 32 - 1))
def test_translation_covariance(kernel16, grid16, sx, sy, seed):
    src = np.zeros(grid16.shape, dtype=complex)
    src[:12, :12] = crandn(np.random.default_rng(seed), (12, 12))
    shifted = np.roll(src, (sx, sy), axis=(0, 1))
    a = apply_potential_2d(src, kernel16)[: 16 - sx, : 16 - sy]
    b = apply_potential_2d(shifted, kernel16)[sx:, sy:]
    assert oracle.relative_error(a, b) < 1e-12


def test_padding_is_sufficient(kernel16, grid16, kb, rng):
    src = crandn(rng, grid16.shape)
    n = 16
    i = np.arange(4 * n)
    w = np.where(i < 2 * n, i, i - 4 * n)
    self_term, off = cell_coefficients(grid16.delta, kb)
    rho = grid16.delta * np.hypot(w[:, None], w[None, :])
    g4 = off * special.hankel2(0, kb * np.where(rho > 0, rho, 1.0))
    g4[0, 0] = self_term
    big = np.fft.ifft2(np.fft.fft2(src, s=(4 * n, 4 * n)) * np.fft.fft2(g4))[:n, :n]
    assert oracle.relative_error(big, apply_potential_2d(src, kernel16)) < 1e-12


def test_shape_mismatch_rejected(kernel16):
    with pytest.raises(ValueError):
        apply_potential_2d(np.zeros((3, 3)), kernel16)


def test_count_mults_2d_examples():
    assert count_mults_2d(64, 64) == 475136
    assert count_mults_2d(1, 1) == 20
    assert count_mults_2d(64, 64) / count_mults_1d(64, 64) == pytest.approx(8.29, abs=5e-3)


@given(p=st.integers(0, 10), q=st.integers(0, 10))
def test_count_mults_2d_power_of_two_sizes(p, q):
    nx, ny = 2 ** p, 2 ** q
    P = nx * ny
    assert count_mults_2d(nx, ny) == 8 * P * (p + q + 2) + 4 * P


def test_empirical_counter(lam, kb):
    grid = CartesianGrid.centered(8, 8, lam / 20)
    op = cartesian_op.CartesianOperator(grid, kb)
    op.apply(np.ones(grid.shape, dtype=complex))
    # two padded FFTs of P = 256 points plus the pointwise product; kernel spectrum is cached
    assert op.counter.total == 256 * 8 + 256
    assert op.counter.total <= op.model_mults()


def test_exterior_direct_sum(lam, kb, rng):
    grid = CartesianGrid.centered(6, 6, lam / 20)
    op = cartesian_op.CartesianOperator(grid, kb)
    src = crandn(rng, grid.shape)
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    R = 2 * grid.bounding_radius()
    _, off = cell_coefficients(grid.delta, kb)
    cx, cy = grid.centers()
    want = [kb * kb * off * np.sum(src * special.hankel2(0, kb * np.hypot(R * math.cos(a) - cx, R * math.sin(a) - cy)))
            for a in ang]
    np.testing.assert_allclose(op.scattered(src, R, ang), want, rtol=1e-12)
    with pytest.raises(ValueError):
        op.scattered(src, 0.5 * grid.bounding_radius(), ang)
