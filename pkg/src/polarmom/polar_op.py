"""Polar-grid potential operator built on one-dimensional FFTs.

For every harmonic n the potential on ring midpoints splits into an outward
part, driven by sources at smaller radius through J_n, and an inward part,
driven by sources at larger radius through H_n^(2):

    A(rho_L, n) = -j pi/2 [ H_n(k rho_L) B_out(rho_L, n) + J_n(k rho_L) B_in(rho_L, n) ]

B_out and B_in are running sums over rings weighted by precomputed ring
integrals, so each harmonic needs one outward and one inward sweep.  All
tables are stored log-scaled (see :mod:`polarmom.specfun`); the sweeps carry
the ratio factors ``(rho_a / rho_b)^n`` between neighbouring scales, which
keeps every intermediate in range for large orders near the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import specfun
from .model import PolarGrid
from .specfun import CylKind

__all__ = [
    "RingIntegralTable",
    "MultCounter",
    "precompute_tables",
    "harmonic_orders",
    "angular_spectrum",
    "inverse_angular_spectrum",
    "accumulate_outward",
    "accumulate_inward",
    "apply_potential",
    "rim_accumulator",
    "exterior_spectrum",
    "exterior_field",
    "count_mults_1d",
    "PolarOperator",
]


def harmonic_orders(n_phi: int) -> np.ndarray:
    """Harmonic index n for each FFT bin, covering -N/2+1 .. N/2."""
    n = np.fft.fftfreq(n_phi, 1.0 / n_phi).astype(int)
    n[n_phi // 2] = n_phi // 2
    return n


@dataclass
class MultCounter:
    """Complex multiplications spent in the spectral part of the product."""

    fft: int = 0
    tables: int = 0
    merge: int = 0

    @property
    def total(self) -> int:
        return self.fft + self.tables + self.merge

    def reset(self) -> None:
        self.fft = self.tables = self.merge = 0


def _fft_mults(n: int) -> int:
    # radix-2 butterflies: one twiddle multiply each
    return (n // 2) * int(math.log2(n)) if n > 1 else 0


@dataclass
class RingIntegralTable:
    """Object-independent integrals for one grid and background.

    Indices are ``[ring m (0-based), |n|]``.  Scaled storage:

    * ``pj_full``  int_{rho_{m-1}}^{rho_m} rho' J_n        * exp(-l_n(rho_m))
    * ``pj_half``  int_{rho_{m-1}}^{rho_{m-1/2}} rho' J_n  * exp(-l_n(rho_{m-1/2}))
    * ``ph_full``  int_{rho_{m-1}}^{rho_m} rho' H_n        * exp(+l_n(rho_{m-1}))
    * ``ph_half``  int_{rho_{m-1/2}}^{rho_m} rho' H_n      * exp(+l_n(rho_{m-1/2}))
    * ``h_mid``    -j pi/2 H_n(k rho_{m-1/2}) * exp(+l_n(rho_{m-1/2}))
    * ``j_mid``    -j pi/2 J_n(k rho_{m-1/2}) * exp(-l_n(rho_{m-1/2}))

    ``ph_full`` for the innermost ring is unscaled and only finite for
    n <= 1; the sweeps never read it.  ``w_edge``, ``w_omid`` and ``w_imid``
    hold the ratios (rho_{m-1}/rho_m)^n, (rho_{m-1}/rho_{m-1/2})^n and
    (rho_{m-1/2}/rho_m)^n that move a running sum from one scale to the next.
    """

    grid: PolarGrid
    k_b: complex
    pj_full: np.ndarray
    pj_half: np.ndarray
    ph_full: np.ndarray
    ph_half: np.ndarray
    h_mid: np.ndarray
    j_mid: np.ndarray
    w_edge: np.ndarray
    w_omid: np.ndarray
    w_imid: np.ndarray
    diagnostics: specfun.Diagnostics = field(default_factory=specfun.Diagnostics)

    @property
    def n_max(self) -> int:
        return self.pj_full.shape[1] - 1

    def _ls(self, n, rho):
        return specfun.log_scale(n, rho, self.k_b)

    # unscaled views, mostly for checking; may over/underflow for large n
    def value(self, name: str, m: int, n: int) -> complex:
        """Unscaled table entry; ``m`` is 0-based, negative ``n`` by reflection."""
        e = self.grid.edges
        mid = self.grid.mids[m]
        na = abs(n)
        scale = {
            "pj_full": self._ls(na, e[m + 1]),
            "pj_half": self._ls(na, mid),
            "ph_full": -self._ls(na, e[m]) if e[m] > 0 else 0.0,
            "ph_half": -self._ls(na, mid),
        }[name]
        sign = -1 if (n < 0 and na % 2) else 1
        with np.errstate(over="ignore", under="ignore"):
            return complex(sign * getattr(self, name)[m, na] * np.exp(scale))


def precompute_tables(grid: PolarGrid, k_b: complex) -> RingIntegralTable:
    """Fill every ring-integral table for ``n = 0..n_phi/2``."""
    k_b = complex(k_b)
    n_max = grid.n_phi // 2
    e = grid.edges
    lo, hi, mid = e[:-1], e[1:], grid.mids
    diag = specfun.Diagnostics()
    pj_full = specfun.ring_integrals_scaled(CylKind.BESSEL_J, n_max, lo, hi, k_b, diag)
    pj_half = specfun.ring_integrals_scaled(CylKind.BESSEL_J, n_max, lo, mid, k_b, diag)
    ph_full = specfun.ring_integrals_scaled(CylKind.HANKEL2, n_max, lo, hi, k_b, diag)
    ph_half = specfun.ring_integrals_scaled(CylKind.HANKEL2, n_max, mid, hi, k_b, diag)
    x_mid = k_b * mid
    fac = -0.5j * np.pi
    h_mid = fac * specfun.scaled_h2(n_max, x_mid)
    j_mid = fac * specfun.scaled_j(n_max, x_mid)
    n = np.arange(n_max + 1)[None, :]
    with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
        w_edge = np.exp(n * np.log(lo / hi)[:, None])
        w_omid = np.exp(n * np.log(lo / mid)[:, None])
        w_imid = np.exp(n * np.log(mid / hi)[:, None])
    w_edge[:, 0] = w_omid[:, 0] = w_imid[:, 0] = 1.0
    return RingIntegralTable(grid, k_b, pj_full, pj_half, ph_full, ph_half, h_mid, j_mid,
                             w_edge, w_omid, w_imid, diag)


# ---------------------------------------------------------------------------
# angular transforms


def angular_spectrum(f: np.ndarray) -> np.ndarray:
    """Per-ring Fourier coefficients (1/N) sum_k f e^{-j n phi_k}, FFT order.

    The half-cell offset of the sample angles is applied as a phase.
    """
    n_phi = f.shape[-1]
    raw = np.fft.fft(f, axis=-1, norm="forward")
    return raw * np.exp(-1j * np.pi * harmonic_orders(n_phi) / n_phi)


def inverse_angular_spectrum(c: np.ndarray) -> np.ndarray:
    n_phi = c.shape[-1]
    c = c * np.exp(1j * np.pi * harmonic_orders(n_phi) / n_phi)
    return np.fft.ifft(c, axis=-1, norm="forward")


# ---------------------------------------------------------------------------
# sweeps


@numba.njit(cache=True)
def _sweep_out(spec, absn, pj_full, pj_half, w_edge, w_omid, h_mid, out):
    n_rings, n_phi = spec.shape
    beta = np.zeros(n_phi, dtype=np.complex128)
    for L in range(n_rings):
        for c in range(n_phi):
            t = absn[c]
            f = spec[L, c]
            b = beta[c]
            out[L, c] += h_mid[L, t] * (b * w_omid[L, t] + f * pj_half[L, t])
            beta[c] = b * w_edge[L, t] + f * pj_full[L, t]
    return beta


@numba.njit(cache=True)
def _sweep_in(spec, absn, ph_full, ph_half, w_edge, w_imid, j_mid, out):
    n_rings, n_phi = spec.shape
    gamma = np.zeros(n_phi, dtype=np.complex128)
    for L in range(n_rings - 1, -1, -1):
        for c in range(n_phi):
            t = absn[c]
            f = spec[L, c]
            g = gamma[c]
            out[L, c] += j_mid[L, t] * (g * w_imid[L, t] + f * ph_half[L, t])
            if L > 0:
                gamma[c] = g * w_edge[L, t] + f * ph_full[L, t]


def _absn(n_phi: int) -> np.ndarray:
    return np.abs(harmonic_orders(n_phi)).astype(np.int64)


def accumulate_outward(spec: np.ndarray, T: RingIntegralTable):
    """Outward potential harmonics at ring midpoints plus the rim accumulator.

    ``spec`` is a harmonic field in FFT order.  Because J_{-n} H_{-n} = J_n H_n
    the reflection signs cancel and only |n| tables are read.

    Returns
    -------
    a_out : ndarray (n_rings, n_phi)
    rim : ndarray (n_phi,)
        B_out(rho_M, n) * exp(-l_n(rho_M)).
    """
    spec = np.ascontiguousarray(spec, dtype=np.complex128)
    out = np.zeros_like(spec)
    rim = _sweep_out(spec, _absn(spec.shape[1]), T.pj_full, T.pj_half, T.w_edge, T.w_omid, T.h_mid, out)
    return out, rim


def accumulate_inward(spec: np.ndarray, T: RingIntegralTable) -> np.ndarray:
    """Inward potential harmonics at ring midpoints."""
    spec = np.ascontiguousarray(spec, dtype=np.complex128)
    out = np.zeros_like(spec)
    _sweep_in(spec, _absn(spec.shape[1]), T.ph_full, T.ph_half, T.w_edge, T.w_imid, T.j_mid, out)
    return out


def apply_potential(source: np.ndarray, T: RingIntegralTable, counter: MultCounter | None = None) -> np.ndarray:
    """A_z at the polar cell centres for a source sampled on the same grid.

    The half-cell angular phase appears once in the forward and once in the
    inverse transform of a diagonal operator, so it cancels and is skipped.
    """
    n_rings, n_phi = source.shape
    spec = np.fft.fft(source, axis=1, norm="forward")
    out = np.zeros_like(spec)
    absn = _absn(n_phi)
    _sweep_out(spec, absn, T.pj_full, T.pj_half, T.w_edge, T.w_omid, T.h_mid, out)
    _sweep_in(spec, absn, T.ph_full, T.ph_half, T.w_edge, T.w_imid, T.j_mid, out)
    if counter is not None:
        counter.fft += 2 * n_rings * _fft_mults(n_phi)
        # per (ring, harmonic): two products per running-sum step, outward
        # edge + midpoint and inward edge + midpoint; inward skips one edge
        counter.tables += 8 * n_rings * n_phi - 2 * n_phi
        counter.merge += 2 * n_rings * n_phi
    return np.fft.ifft(out, axis=1, norm="forward")


def rim_accumulator(source: np.ndarray, T: RingIntegralTable) -> np.ndarray:
    """Scaled B_out at the embedding rim from a source on the grid."""
    _, rim = accumulate_outward(angular_spectrum(source), T)
    return rim


def exterior_spectrum(rim: np.ndarray, k_b: complex, rho_m: float, rho_obs: float) -> np.ndarray:
    """Outward potential harmonics on a circle outside the embedding disk.

    A(rho_M, n) = -j pi/2 H_n(k rho_M) B_out(rho_M, n) is carried to rho by
    the Hankel ratio H_n(k rho) / H_n(k rho_M), evaluated in scaled form.
    """
    if rho_obs < rho_m:
        raise ValueError("observation radius must not be inside the embedding disk")
    n_phi = rim.size
    n_max = n_phi // 2
    absn = _absn(n_phi)
    h_rim = specfun.scaled_h2(n_max, k_b * rho_m)[0]
    h_obs = specfun.scaled_h2(n_max, k_b * rho_obs)[0]
    a_rim = -0.5j * np.pi * h_rim[absn] * rim
    with np.errstate(under="ignore"):
        ratio = (h_obs / h_rim) * np.exp(np.arange(n_max + 1) * math.log(rho_m / rho_obs))
    return ratio[absn] * a_rim


def exterior_field(rim: np.ndarray, k_b: complex, rho_m: float, rho_obs: float, angles) -> np.ndarray:
    """Scattered field k_b^2 A_z at the given angles on radius ``rho_obs``."""
    coef = exterior_spectrum(rim, k_b, rho_m, rho_obs)
    n = harmonic_orders(rim.size)
    phase = np.exp(1j * np.outer(np.asarray(angles, dtype=float), n))
    return k_b * k_b * (phase @ coef)


def count_mults_1d(n_rings: int, n_phi: int) -> int:
    """Model count 2 M N log2 N + 2 M N for one potential evaluation."""
    if n_phi < 1 or n_phi & (n_phi - 1):
        raise ValueError("n_phi must be a power of two")
    lg = int(math.log2(n_phi))
    return 2 * n_rings * n_phi * lg + 2 * n_rings * n_phi


class PolarOperator:
    """Potential operator bound to one grid and background."""

    name = "polar"

    def __init__(self, grid: PolarGrid, k_b: complex, table: RingIntegralTable | None = None):
        self.grid = grid
        self.k_b = complex(k_b)
        self.table = table if table is not None else precompute_tables(grid, k_b)
        self.counter = MultCounter()

    @property
    def shape(self):
        return self.grid.shape

    def apply(self, source: np.ndarray) -> np.ndarray:
        return apply_potential(source, self.table, self.counter)

    def model_mults(self) -> int:
        return count_mults_1d(self.grid.n_rings, self.grid.n_phi)

    def points(self):
        return self.grid.centers()

    def scattered(self, source: np.ndarray, radius: float, angles) -> np.ndarray:
        rim = rim_accumulator(source, self.table)
        return exterior_field(rim, self.k_b, self.grid.radius, radius, angles)
