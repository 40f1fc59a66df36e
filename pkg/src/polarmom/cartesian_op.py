"""Cartesian baseline: zero-padded 2-D FFT convolution on square cells.

Each square cell is replaced by the circle of equal area, radius
``a = delta / sqrt(pi)``, over which the Green function integrates in closed
form:

    self cell   -j pi a / (2 k) H_1^(2)(k a) - 1 / k^2
    other cell  -j pi a / (2 k) J_1(k a) H_0^(2)(k rho)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .model import CartesianGrid
from .polar_op import MultCounter

__all__ = [
    "CartesianKernel",
    "KernelCheckError",
    "cell_coefficients",
    "build_kernel",
    "apply_potential_2d",
    "count_mults_2d",
    "direct_kernel_sum",
    "CartesianOperator",
]


class KernelCheckError(RuntimeError):
    """Closed-form cell integrals disagree with quadrature."""


@dataclass
class CartesianKernel:
    grid: CartesianGrid
    k_b: complex
    a_eq: float
    g: np.ndarray          # circulant layout, shape (2 nx, 2 ny)
    g_hat: np.ndarray      # its 2-D spectrum


def cell_coefficients(delta: float, k_b: complex):
    """(self entry, off-cell factor) for the equal-area circular cell."""
    a = delta / math.sqrt(math.pi)
    self_term = -1j * math.pi * a / (2 * k_b) * special.hankel2(1, k_b * a) - 1.0 / k_b ** 2
    off_factor = -1j * math.pi * a / (2 * k_b) * special.jv(1, k_b * a)
    return complex(self_term), complex(off_factor)


def _disk_quadrature(k_b: complex, a: float, d: float) -> complex:
    """(-j/4) int over a disk of radius a of H_0(k |r - p|), |p - centre| = d."""
    if d == 0.0:
        f = lambda r: 2 * math.pi * r * complex(special.hankel2(0, k_b * r)) if r > 0 else 0j  # noqa: E731
        v, _ = integrate.quad(f, 0, a, complex_func=True, epsabs=1e-14, epsrel=1e-12, limit=200)
        return -0.25j * v

    def inner(r):
        g = lambda t: complex(special.hankel2(0, k_b * math.sqrt(d * d + r * r - 2 * d * r * math.cos(t))))  # noqa: E731
        v, _ = integrate.quad(g, 0, math.pi, complex_func=True, epsabs=1e-14, epsrel=1e-12, limit=200)
        return 2 * r * v

    v, _ = integrate.quad(inner, 0, a, complex_func=True, epsabs=1e-14, epsrel=1e-11, limit=200)
    return -0.25j * v


def check_cell_coefficients(delta: float, k_b: complex, tol: float = 1e-6) -> None:
    """Compare the closed forms with 2-D quadrature at three probe cells."""
    a = delta / math.sqrt(math.pi)
    self_term, off = cell_coefficients(delta, k_b)
    probes = [(0.0, self_term)]
    for d in (delta, math.hypot(2, 1) * delta):
        probes.append((d, off * complex(special.hankel2(0, k_b * d))))
    for d, closed in probes:
        ref = _disk_quadrature(k_b, a, d)
        err = abs(closed - ref) / abs(ref)
        if err > tol:
            raise KernelCheckError(
                f"cell integral at distance {d:.3g} off by {err:.2e} relative"
            )


def _wrapped(n: int) -> np.ndarray:
    i = np.arange(2 * n)
    return np.where(i < n, i, i - 2 * n)


def build_kernel(grid: CartesianGrid, k_b: complex, self_check: bool = True) -> CartesianKernel:
    """Green samples on the 2 nx x 2 ny circulant grid and their FFT."""
    k_b = complex(k_b)
    if self_check:
        check_cell_coefficients(grid.delta, k_b)
    self_term, off = cell_coefficients(grid.delta, k_b)
    dx = _wrapped(grid.nx)[:, None]
    dy = _wrapped(grid.ny)[None, :]
    rho = grid.delta * np.sqrt(dx * dx + dy * dy)
    with np.errstate(invalid="ignore"):
        g = off * special.hankel2(0, k_b * np.where(rho > 0, rho, 1.0))
    g[0, 0] = self_term
    return CartesianKernel(grid, k_b, grid.delta / math.sqrt(math.pi), g, np.fft.fft2(g))


def _fft_mults(n: int) -> int:
    return int(round(n / 2 * math.log2(n))) if n > 1 else 0


def apply_potential_2d(source: np.ndarray, K: CartesianKernel, counter: MultCounter | None = None) -> np.ndarray:
    """Discrete convolution of the source with the kernel via padded FFTs."""
    nx, ny = K.grid.shape
    if source.shape != (nx, ny):
        raise ValueError(f"source shape {source.shape} does not match grid {(nx, ny)}")
    padded = np.fft.fft2(source, s=(2 * nx, 2 * ny))
    out = np.fft.ifft2(padded * K.g_hat)[:nx, :ny]
    if counter is not None:
        P = 4 * nx * ny
        counter.fft += 2 * _fft_mults(P)
        counter.merge += P
    return out


def count_mults_2d(nx: int, ny: int) -> int:
    """Model count 8 M N log2(4 M N) + 4 M N, rounded to an integer."""
    P = nx * ny
    return int(round(8 * P * math.log2(4 * P) + 4 * P))


def direct_kernel_sum(source: np.ndarray, K: CartesianKernel, x, y) -> np.ndarray:
    """sum_cells g(|r - r_c|) source_c at arbitrary points outside the cells."""
    cx, cy = K.grid.centers()
    cx, cy, s = cx.ravel(), cy.ravel(), source.ravel()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _, off = cell_coefficients(K.grid.delta, K.k_b)
    out = np.empty(x.size, dtype=complex)
    for i in range(x.size):
        rho = np.hypot(x[i] - cx, y[i] - cy)
        out[i] = off * (special.hankel2(0, K.k_b * rho) @ s)
    return out


class CartesianOperator:
    """Potential operator bound to one Cartesian grid and background."""

    name = "cartesian"

    def __init__(self, grid: CartesianGrid, k_b: complex, kernel: CartesianKernel | None = None):
        self.grid = grid
        self.k_b = complex(k_b)
        self.kernel = kernel if kernel is not None else build_kernel(grid, k_b)
        self.counter = MultCounter()

    @property
    def shape(self):
        return self.grid.shape

    def apply(self, source: np.ndarray) -> np.ndarray:
        return apply_potential_2d(source, self.kernel, self.counter)

    def model_mults(self) -> int:
        return count_mults_2d(self.grid.nx, self.grid.ny)

    def points(self):
        return self.grid.centers()

    def scattered(self, source: np.ndarray, radius: float, angles) -> np.ndarray:
        """k_b^2 A_z on a circle by direct summation over all cells."""
        ang = np.asarray(angles, dtype=float)
        if radius <= self.grid.bounding_radius():
            raise ValueError("observation circle intersects the Cartesian grid")
        A = direct_kernel_sum(source, self.kernel, radius * np.cos(ang), radius * np.sin(ang))
        return self.k_b ** 2 * A
