"""Independent references and comparison metrics.

* exact scattering by a layered circular cylinder (cylindrical-harmonic series)
* brute-force quadrature of the 2-D potential integral over pulse cells
* dense reference operators and non-recursive ring sums
* relative error and efficiency-gain formulas
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import Background, CartesianGrid, ObservationCircle, PolarGrid, complex_wavenumber, wavenumber
from .specfun import cyl_fn, CylKind

__all__ = [
    "NumericalError",
    "LayeredCylinder",
    "series_coefficients",
    "analytic_scattered",
    "energy_balance",
    "born_disk_scattered",
    "duffy_rectangle",
    "direct_quadrature_potential",
    "dense_operator",
    "dense_cartesian_matrix",
    "direct_outward_sum",
    "direct_inward_sum",
    "relative_error",
    "efficiency_gain",
    "ComparisonMetrics",
]


class NumericalError(RuntimeError):
    """A reference computation could not reach its accuracy target."""


# ---------------------------------------------------------------------------
# layered cylinder


@dataclass(frozen=True)
class LayeredCylinder:
    """Concentric layers centred at the origin; ``radii`` are outer radii."""

    radii: tuple[float, ...]
    eps_r: tuple[float, ...]
    sigma: tuple[float, ...]
    background: Background = Background()

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("layer radii must be positive and strictly increasing")
        if not (len(self.eps_r) == len(self.sigma) == r.size):
            raise ValueError("one (eps_r, sigma) pair per layer required")

    def wavenumbers(self, frequency: float) -> np.ndarray:
        return np.array([complex_wavenumber(e, s, frequency) for e, s in zip(self.eps_r, self.sigma)])


def _coefficient(n: int, ks, radii, k_b) -> complex:
    """Exterior coefficient a_n by log-derivative transfer through the layers."""
    D = None
    for i, r in enumerate(radii):
        k = ks[i]
        if i == 0:
            x = k * r
            D = k * special.jvp(n, x) / special.jv(n, x)
        else:
            x = k * radii[i - 1]
            J, Jp = special.jv(n, x), special.jvp(n, x)
            H, Hp = special.hankel2(n, x), special.h2vp(n, x)
            R = (k * Jp - D * J) / (D * H - k * Hp)
            x = k * r
            D = k * (special.jvp(n, x) + R * special.h2vp(n, x)) / (special.jv(n, x) + R * special.hankel2(n, x))
    x = k_b * radii[-1]
    J, Jp = special.jv(n, x), special.jvp(n, x)
    H, Hp = special.hankel2(n, x), special.h2vp(n, x)
    return complex((k_b * Jp - D * J) / (D * H - k_b * Hp))


def series_coefficients(cyl: LayeredCylinder, frequency: float, n_max: int) -> np.ndarray:
    """a_n for n = 0..n_max (a_{-n} = a_n).

    Orders whose Bessel values leave floating range are set to zero; they
    are far in the evanescent tail by then.
    """
    ks = cyl.wavenumbers(frequency)
    k_b = wavenumber(cyl.background, frequency)
    a = np.zeros(n_max + 1, dtype=complex)
    with np.errstate(all="ignore"):
        for n in range(n_max + 1):
            if np.allclose(ks, k_b, rtol=0, atol=0):
                break
            v = _coefficient(n, ks, cyl.radii, k_b)
            if not np.isfinite(v):
                if n > abs(ks).max() * cyl.radii[-1]:
                    break
                raise NumericalError(f"series coefficient {n} is not finite")
            a[n] = v
    return a


def _default_order(cyl: LayeredCylinder, frequency: float) -> int:
    ks = cyl.wavenumbers(frequency)
    return int(math.ceil(abs(ks).max() * cyl.radii[-1])) + 20


def analytic_scattered(cyl: LayeredCylinder, k_b: complex, frequency: float,
                       circle: ObservationCircle, n_max: int | None = None) -> np.ndarray:
    """Exact scattered E_z for a unit plane wave exp(-j k_b x).

    E^s = sum_n (-j)^n a_n H_n^(2)(k_b rho) e^{j n phi}.  The order is
    doubled once if the last retained term is not below 1e-12 of the sum.
    """
    if not np.isclose(k_b, wavenumber(cyl.background, frequency), rtol=1e-12):
        raise ValueError("k_b does not match the cylinder background")
    n0 = n_max if n_max is not None else _default_order(cyl, frequency)
    ang = circle.angles
    for N in (n0, 2 * n0):
        a = series_coefficients(cyl, frequency, N)
        n = np.arange(N + 1)
        with np.errstate(all="ignore"):
            h = special.hankel2(n, k_b * circle.radius)
            term = (-1j) ** n * a * h
        term = np.where(a == 0, 0, term)
        if not np.all(np.isfinite(term)):
            raise NumericalError("non-finite term in exterior series")
        # e^{jn phi} + e^{-jn phi} for n > 0
        weight = np.where(n == 0, 1.0, 2.0)
        field = np.cos(np.outer(ang, n)) @ (weight * term)
        tail = abs(term[-1]) * 2
        scale = max(np.abs(field).max(), np.abs(term).max(), 1e-300)
        if tail < 1e-12 * scale or not np.any(term):
            return field
    raise NumericalError("cylinder series did not converge at twice the default order")


def energy_balance(coeffs: np.ndarray) -> tuple[float, float]:
    """(scattered power, extinguished power) up to a common factor.

    For a lossless cylinder sum |a_n|^2 = -sum Re a_n over all n.
    """
    w = np.where(np.arange(coeffs.size) == 0, 1.0, 2.0)
    return float(np.sum(w * np.abs(coeffs) ** 2)), float(-np.sum(w * coeffs.real))


def born_disk_scattered(k_b: complex, chi: complex, radius: float, circle: ObservationCircle,
                        n_max: int | None = None) -> np.ndarray:
    """First-order (Born) field of a homogeneous disk lit by exp(-j k_b x)."""
    N = n_max if n_max is not None else int(math.ceil(abs(k_b) * radius)) + 20
    n = np.arange(N + 1)
    x = k_b * radius
    radial = radius ** 2 / 2 * (special.jvp(n, x) ** 2 + (1 - n ** 2 / x ** 2) * special.jv(n, x) ** 2)
    term = (-1j) ** n * special.hankel2(n, k_b * circle.radius) * radial
    weight = np.where(n == 0, 1.0, 2.0)
    field = np.cos(np.outer(circle.angles, n)) @ (weight * term)
    return k_b ** 2 * chi * (-0.5j * np.pi) * field


# ---------------------------------------------------------------------------
# brute-force quadrature


def duffy_rectangle(u0, u1, v0, v1, us, vs, q):
    """Nodes and weights on [u0,u1]x[v0,v1] for a singularity at (us, vs).

    The rectangle is cut into up to four sub-rectangles meeting at the
    singular point, each split into two triangles whose Duffy maps cancel a
    1/r or log r behaviour at the shared corner.  Returns flat arrays
    ``(u, v, weight)``.
    """
    t, w = np.polynomial.legendre.leggauss(q)
    t = 0.5 * (t + 1)
    w = 0.5 * w
    # radial grading s = t^3 smooths the s log s behaviour left by the map
    S, T = np.meshgrid(t ** 3, t, indexing="ij")
    W = np.outer(3 * t ** 2 * w, w)
    U, V, Wt = [], [], []
    for a in (u0, u1):
        for b in (v0, v1):
            if a == us or b == vs:
                continue
            P0 = np.array([us, vs])
            corners = [np.array([a, vs]), np.array([a, b]), np.array([us, b])]
            for P1, P2 in ((corners[0], corners[1]), (corners[1], corners[2])):
                e1, e2 = P1 - P0, P2 - P1
                det = abs(e1[0] * e2[1] - e1[1] * e2[0])
                pu = P0[0] + S * (e1[0] + T * e2[0])
                pv = P0[1] + S * (e1[1] + T * e2[1])
                U.append(pu.ravel())
                V.append(pv.ravel())
                Wt.append((W * S * det).ravel())
    return np.concatenate(U), np.concatenate(V), np.concatenate(Wt)


def _gauss_rect(u0, u1, v0, v1, q):
    t, w = np.polynomial.legendre.leggauss(q)
    u = 0.5 * (u1 - u0) * (t + 1) + u0
    v = 0.5 * (v1 - v0) * (t + 1) + v0
    U, V = np.meshgrid(u, v, indexing="ij")
    return U.ravel(), V.ravel(), np.outer(w, w).ravel() * (u1 - u0) * (v1 - v0) / 4


def _cells(grid):
    """Parameter rectangles, map kind and centres for every cell."""
    if isinstance(grid, PolarGrid):
        e = grid.edges
        dphi = 2 * np.pi / grid.n_phi
        phi = grid.phis
        r0 = np.repeat(e[:-1], grid.n_phi)
        r1 = np.repeat(e[1:], grid.n_phi)
        p0 = np.tile(phi - dphi / 2, grid.n_rings)
        p1 = np.tile(phi + dphi / 2, grid.n_rings)
        return "polar", np.stack([r0, r1, p0, p1], axis=1)
    if isinstance(grid, CartesianGrid):
        x, y = grid.centers()
        h = grid.delta / 2
        x, y = x.ravel(), y.ravel()
        return "cart", np.stack([x - h, x + h, y - h, y + h], axis=1)
    raise TypeError("unsupported grid type")


def _to_xy(kind, U, V):
    if kind == "polar":
        return U * np.cos(V), U * np.sin(V), U
    return U, V, np.ones_like(U)


def _to_param(kind, x, y):
    if kind == "polar":
        return math.hypot(x, y), math.atan2(y, x)
    return x, y


def direct_quadrature_potential(source: np.ndarray, grid, k_b: complex, x, y,
                                self_order: int = 16) -> np.ndarray:
    """(-j/4) sum_cells source_c * int_cell H_0^(2)(k_b |r - r'|) dr' at (x, y).

    Cells are annular sectors for a :class:`PolarGrid` and squares for a
    :class:`CartesianGrid`.  The Gauss-Legendre order per cell grows as the
    evaluation point approaches the cell; a cell containing the point is
    integrated with :func:`duffy_rectangle`.
    """
    kind, rects = _cells(grid)
    s = np.asarray(source, dtype=complex).ravel()
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    k_b = complex(k_b)
    active = np.nonzero(s)[0]
    out = np.zeros(x.size, dtype=complex)
    if active.size == 0:
        return out

    # centres and sizes of active cells
    cu = 0.5 * (rects[active, 0] + rects[active, 1])
    cv = 0.5 * (rects[active, 2] + rects[active, 3])
    cx, cy, _ = _to_xy(kind, cu, cv)
    if kind == "polar":
        size = np.maximum(rects[active, 1] - rects[active, 0], rects[active, 1] * (rects[active, 3] - rects[active, 2]))
    else:
        size = rects[active, 1] - rects[active, 0]

    # far rules, cached per order, built in parameter space of each cell
    rules = {}

    def rule(q):
        if q not in rules:
            U, V, W = [], [], []
            for r in rects[active]:
                u, v, w = _gauss_rect(*r, q)
                U.append(u)
                V.append(v)
                W.append(w)
            U, V, W = np.array(U), np.array(V), np.array(W)
            X, Y, jac = _to_xy(kind, U, V)
            rules[q] = (X, Y, W * jac)
        return rules[q]

    for p in range(x.size):
        d = np.hypot(cx - x[p], cy - y[p]) / size
        pu, pv = _to_param(kind, x[p], y[p])
        if kind == "polar":
            # bring the angle into each cell's parameter window
            pv_c = pv + 2 * np.pi * np.round((cv - pv) / (2 * np.pi))
        else:
            pv_c = np.full(active.size, pv)
        inside = ((rects[active, 0] <= pu) & (pu <= rects[active, 1])
                  & (rects[active, 2] <= pv_c) & (pv_c <= rects[active, 3]))
        total = 0j
        for q, sel in ((4, (d > 4) & ~inside), (8, (d > 1.5) & (d <= 4) & ~inside),
                       (20, (d <= 1.5) & ~inside)):
            if not np.any(sel):
                continue
            X, Y, W = rule(q)
            r = np.hypot(X[sel] - x[p], Y[sel] - y[p])
            g = special.hankel2(0, k_b * r)
            total += np.sum(s[active[sel]] * np.sum(W[sel] * g, axis=1))
        for c in np.nonzero(inside)[0]:
            u0, u1, v0, v1 = rects[active[c]]
            U, V, W = duffy_rectangle(u0, u1, v0, v1, pu, pv_c[c], self_order)
            X, Y, jac = _to_xy(kind, U, V)
            r = np.hypot(X - x[p], Y - y[p])
            total += s[active[c]] * np.sum(W * jac * special.hankel2(0, k_b * r))
        out[p] = -0.25j * total
    return out


# ---------------------------------------------------------------------------
# dense references


def dense_operator(apply, shape) -> np.ndarray:
    """Matrix of a linear field-to-field map, column j = apply(e_j)."""
    n = int(np.prod(shape))
    cols = np.empty((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        cols[:, j] = np.asarray(apply(e.reshape(shape))).ravel()
    return cols


def dense_cartesian_matrix(grid: CartesianGrid, k_b: complex) -> np.ndarray:
    """Explicit potential matrix with the equal-area cell kernel."""
    a = grid.delta / math.sqrt(math.pi)
    k_b = complex(k_b)
    self_term = -1j * math.pi * a / (2 * k_b) * special.hankel2(1, k_b * a) - 1 / k_b ** 2
    off = -1j * math.pi * a / (2 * k_b) * special.jv(1, k_b * a)
    x, y = grid.centers()
    x, y = x.ravel(), y.ravel()
    R = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    np.fill_diagonal(R, 1.0)
    G = off * special.hankel2(0, k_b * R)
    np.fill_diagonal(G, self_term)
    return G


def direct_outward_sum(spec: np.ndarray, T) -> np.ndarray:
    """Outward potential harmonics by explicit summation over inner rings."""
    n_rings, n_phi = spec.shape
    from .polar_op import harmonic_orders
    ns = harmonic_orders(n_phi)
    out = np.zeros_like(spec, dtype=complex)
    mids = T.grid.mids
    for c, n in enumerate(ns):
        for L in range(n_rings):
            acc = sum(spec[m, c] * T.value("pj_full", m, n) for m in range(L))
            acc += spec[L, c] * T.value("pj_half", L, n)
            out[L, c] = -0.5j * np.pi * cyl_fn(CylKind.HANKEL2, n, T.k_b * mids[L]) * acc
    return out


def direct_inward_sum(spec: np.ndarray, T) -> np.ndarray:
    """Inward potential harmonics by explicit summation over outer rings."""
    n_rings, n_phi = spec.shape
    from .polar_op import harmonic_orders
    ns = harmonic_orders(n_phi)
    out = np.zeros_like(spec, dtype=complex)
    mids = T.grid.mids
    for c, n in enumerate(ns):
        for L in range(n_rings):
            acc = sum(spec[m, c] * T.value("ph_full", m, n) for m in range(L + 1, n_rings))
            acc += spec[L, c] * T.value("ph_half", L, n)
            out[L, c] = -0.5j * np.pi * cyl_fn(CylKind.BESSEL_J, n, T.k_b * mids[L]) * acc
    return out


# ---------------------------------------------------------------------------
# metrics


def relative_error(reference, computed) -> float:
    """||reference - computed||_2 / ||reference||_2."""
    ref = np.asarray(reference)
    den = np.linalg.norm(ref)
    if den == 0:
        raise ValueError("reference field has zero norm")
    return float(np.linalg.norm(ref - np.asarray(computed)) / den)


def efficiency_gain(n2_iters: int, nx: int, ny: int, n1_iters: int, n_rings: int, n_phi: int) -> float:
    """Iteration-weighted ratio of FFT work, Cartesian over polar."""
    if min(n2_iters, nx, ny, n1_iters, n_rings, n_phi) <= 0:
        raise ValueError("all arguments must be positive")
    num = 4 * n2_iters * nx * ny * math.log2(4 * nx * ny)
    den = n1_iters * n_rings * n_phi * math.log2(n_phi)
    if den == 0:
        raise ValueError("n_phi must exceed 1")
    return num / den


@dataclass
class ComparisonMetrics:
    error_polar: float | None
    error_cartesian: float | None
    time_ratio: float
    efficiency_gain: float
    iterations_polar: int
    iterations_cartesian: int
