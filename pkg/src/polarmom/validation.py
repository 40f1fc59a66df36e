"""Quick oracle checks behind ``polarmom validate``.

Each check returns ``(name, passed, detail)``; all run in a few seconds.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from . import oracle, polar_op, specfun
from .cartesian_op import apply_potential_2d, build_kernel
from .model import Background, CartesianGrid, ObservationCircle, PolarGrid, wavelength, wavenumber
from .solver import ForwardOperator, apply_L, bcgs_solve

FREQ = 1.2e9


def _setup():
    lam = wavelength(FREQ)
    return lam, wavenumber(Background(), FREQ)


def check_addition_theorem():
    lam, k = _setup()
    rng = np.random.default_rng(1)
    r, rp = rng.uniform(0, 30 / k.real, (2, 200))
    d = rng.uniform(0, 2 * np.pi, 200)
    keep = np.abs(r - rp) >= 1e-3 * lam
    r, rp, d = r[keep], rp[keep], d[keep]
    exact = special.hankel2(0, k * np.sqrt(r * r + rp * rp - 2 * r * rp * np.cos(d)))
    series = specfun.h0_addition_series(k, r, rp, d, tol=1e-12)
    err = np.max(np.abs(series - exact) / np.abs(exact))
    return "addition theorem (ratio-aware truncation)", err < 1e-8, f"max rel err {err:.1e}"


def check_ring_integrals():
    lam, k = _setup()
    grid = PolarGrid.uniform(0.3 * lam, 4, 16)
    T = polar_op.precompute_tables(grid, k)
    e = grid.edges
    worst = 0.0
    for m in range(grid.n_rings):
        for n in range(T.n_max + 1):
            cases = [("pj_full", specfun.CylKind.BESSEL_J, e[m], e[m + 1]),
                     ("pj_half", specfun.CylKind.BESSEL_J, e[m], grid.mids[m]),
                     ("ph_half", specfun.CylKind.HANKEL2, grid.mids[m], e[m + 1])]
            if m > 0 or n <= 1:
                cases.append(("ph_full", specfun.CylKind.HANKEL2, e[m], e[m + 1]))
            for name, kind, a, b in cases:
                ref = specfun.quad_ring_integral(kind, n, specfun.RingInterval(a, b, k))
                worst = max(worst, abs(T.value(name, m, n) - ref) / abs(ref))
    return "ring integrals vs adaptive quadrature", worst < 1e-8, f"max rel err {worst:.1e}"


def check_sweeps():
    lam, k = _setup()
    grid = PolarGrid.uniform(0.3 * lam, 6, 16)
    T = polar_op.precompute_tables(grid, k)
    rng = np.random.default_rng(2)
    spec = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    out, _ = polar_op.accumulate_outward(spec, T)
    inn = polar_op.accumulate_inward(spec, T)
    e1 = oracle.relative_error(oracle.direct_outward_sum(spec, T), out)
    e2 = oracle.relative_error(oracle.direct_inward_sum(spec, T), inn)
    err = max(e1, e2)
    return "recursive sweeps vs explicit sums", err < 1e-12, f"max rel err {err:.1e}"


def check_cartesian_fft():
    lam, k = _setup()
    grid = CartesianGrid.centered(12, 12, lam / 20)
    K = build_kernel(grid, k)
    rng = np.random.default_rng(3)
    s = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    dense = (oracle.dense_cartesian_matrix(grid, k) @ s.ravel()).reshape(grid.shape)
    err = oracle.relative_error(dense, apply_potential_2d(s, K))
    return "Cartesian FFT product vs dense sum", err < 1e-12, f"rel err {err:.1e}"


def check_born():
    lam, k = _setup()
    circle = ObservationCircle(0.6 * lam, 72)
    cyl = oracle.LayeredCylinder((0.2 * lam,), (1.01,), (0.0,))
    exact = oracle.analytic_scattered(cyl, k, FREQ, circle)
    born = oracle.born_disk_scattered(k, 0.01, 0.2 * lam, circle)
    err = oracle.relative_error(exact, born)
    return "cylinder series vs Born approximation", err < 0.01, f"rel diff {err:.1e}"


def check_energy():
    lam, _ = _setup()
    cyl = oracle.LayeredCylinder((0.05 * lam, 0.15 * lam), (8.0, 45.0), (0.0, 0.0))
    n = oracle._default_order(cyl, FREQ)
    scat, ext = oracle.energy_balance(oracle.series_coefficients(cyl, FREQ, n))
    err = abs(scat - ext) / ext
    return "lossless energy balance", err < 1e-6, f"rel diff {err:.1e}"


def check_bcgs():
    lam, k = _setup()
    grid = PolarGrid.uniform(0.2 * lam, 8, 16)
    op = ForwardOperator(polar_op.PolarOperator(grid, k), np.full(grid.shape, 0.1), k)
    rep = bcgs_solve(op, tol=1e-12)
    M = oracle.dense_operator(lambda v: apply_L(op, v), grid.shape)
    ref = np.linalg.solve(M, op.incident().ravel())
    err = oracle.relative_error(ref, rep.field.ravel())
    return "Bi-CGSTAB vs dense LU", rep.converged and err < 1e-6, f"rel err {err:.1e}, {rep.iterations} iterations"


def check_exterior():
    lam, k = _setup()
    grid = PolarGrid.uniform(0.2 * lam, 8, 16)
    T = polar_op.precompute_tables(grid, k)
    rng = np.random.default_rng(4)
    s = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    ang = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    R = 3 * grid.radius
    ext = polar_op.exterior_field(polar_op.rim_accumulator(s, T), k, grid.radius, R, ang)
    quad = k * k * oracle.direct_quadrature_potential(s, grid, k, R * np.cos(ang), R * np.sin(ang))
    err = oracle.relative_error(quad, ext)
    return "exterior field vs quadrature", err < 1e-2, f"rel err {err:.1e}"


CHECKS = (check_addition_theorem, check_ring_integrals, check_sweeps, check_cartesian_fft,
          check_born, check_energy, check_bcgs, check_exterior)


def run_checks():
    out = []
    for fn in CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # a crashing oracle is a failed check
            out.append((fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
