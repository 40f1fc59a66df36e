"""Scenario description: background, materials, grids and incident field.

Time convention is exp(j omega t); the background wavenumber therefore has
a non-positive imaginary part and the incident plane wave travelling along
+x is exp(-j k_b x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# rounded speed of light (lambda = 0.25 m at 1.2 GHz); mu0 and eps0 are kept
# consistent with it so that k0 = omega / C0 exactly
C0 = 3.0e8
MU0 = 4e-7 * math.pi
EPS0 = 1.0 / (MU0 * C0 * C0)


class ConfigError(ValueError):
    """Invalid scenario or grid configuration."""


@dataclass(frozen=True)
class Background:
    eps_r: float = 1.0
    sigma: float = 0.0


def complex_wavenumber(eps_r, sigma, frequency):
    """k with k^2 = w^2 mu0 eps0 eps_r - j w mu0 sigma, principal root."""
    if frequency <= 0:
        raise ConfigError("frequency must be positive")
    w = 2 * math.pi * frequency
    k2 = w * w * MU0 * EPS0 * np.asarray(eps_r) - 1j * w * MU0 * np.asarray(sigma)
    return np.sqrt(k2 + 0j)


def wavenumber(bg: Background, frequency: float) -> complex:
    return complex(complex_wavenumber(bg.eps_r, bg.sigma, frequency))


def wavelength(frequency: float) -> float:
    """Free-space wavelength."""
    return C0 / frequency


# ---------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float
    eps_r: float
    sigma: float = 0.0

    def paint(self, x, y, eps, sig):
        inside = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 < self.radius ** 2
        eps[inside] = self.eps_r
        sig[inside] = self.sigma

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radius

    def feature(self) -> float:
        return 2 * self.radius


@dataclass(frozen=True)
class Rectangle:
    center: tuple[float, float]
    width: float
    height: float
    eps_r: float
    sigma: float = 0.0

    def paint(self, x, y, eps, sig):
        inside = (np.abs(x - self.center[0]) < self.width / 2) & (np.abs(y - self.center[1]) < self.height / 2)
        eps[inside] = self.eps_r
        sig[inside] = self.sigma

    def extent(self) -> float:
        cx, cy = self.center
        return max(
            math.hypot(cx + sx * self.width / 2, cy + sy * self.height / 2)
            for sx in (-1, 1)
            for sy in (-1, 1)
        )

    def feature(self) -> float:
        return min(self.width, self.height)


@dataclass(frozen=True)
class Layered:
    """Concentric circular layers; radii ascending, one material per layer."""

    center: tuple[float, float]
    radii: tuple[float, ...]
    eps_r: tuple[float, ...]
    sigma: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.radii) == len(self.eps_r) == len(self.sigma)) or not self.radii:
            raise ConfigError("layered shape needs equally long radii, eps_r and sigma lists")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])) or self.radii[0] <= 0:
            raise ConfigError("layer radii must be positive and strictly increasing")

    def paint(self, x, y, eps, sig):
        r2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        # outermost first so inner layers overwrite
        for rad, e, s in reversed(list(zip(self.radii, self.eps_r, self.sigma))):
            inside = r2 < rad ** 2
            eps[inside] = e
            sig[inside] = s

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radii[-1]

    def feature(self) -> float:
        sizes = [2 * self.radii[0]] + [b - a for a, b in zip(self.radii, self.radii[1:])]
        return min(sizes)


@dataclass(frozen=True)
class Raster:
    """Row-major permittivity (and optional conductivity) matrix.

    Entry ``[i, j]`` covers the square cell whose lower-left corner is
    ``origin + (j, i) * cell``; lookups use the nearest cell.
    """

    eps_r: np.ndarray
    sigma: np.ndarray
    origin: tuple[float, float]
    cell: float

    def paint(self, x, y, eps, sig):
        ny, nx = self.eps_r.shape
        j = np.floor((x - self.origin[0]) / self.cell).astype(int)
        i = np.floor((y - self.origin[1]) / self.cell).astype(int)
        inside = (i >= 0) & (i < ny) & (j >= 0) & (j < nx)
        eps[inside] = self.eps_r[i[inside], j[inside]]
        sig[inside] = self.sigma[i[inside], j[inside]]

    def extent(self) -> float:
        ny, nx = self.eps_r.shape
        x0, y0 = self.origin
        xs = (x0, x0 + nx * self.cell)
        ys = (y0, y0 + ny * self.cell)
        return max(math.hypot(a, b) for a in xs for b in ys)

    def feature(self) -> float:
        return self.cell


@dataclass(frozen=True)
class MaterialMap:
    """Shapes painted in order over the background; later shapes win."""

    shapes: tuple = ()

    def materials(self, x, y, bg: Background):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        eps = np.full(np.broadcast(x, y).shape, float(bg.eps_r))
        sig = np.full(eps.shape, float(bg.sigma))
        xb, yb = np.broadcast_arrays(x, y)
        for s in self.shapes:
            s.paint(xb, yb, eps, sig)
        return eps, sig

    def support_radius(self) -> float:
        return max((s.extent() for s in self.shapes), default=0.0)

    def feature_size(self) -> float:
        return min((s.feature() for s in self.shapes), default=math.inf)

    def max_eps(self, bg: Background) -> float:
        vals = [bg.eps_r]
        for s in self.shapes:
            vals.extend(np.ravel(s.eps_r).tolist())
        return float(max(vals))

    def concentric_radii(self) -> list[float]:
        """Material interfaces that are circles about the origin."""
        out = []
        for s in self.shapes:
            if isinstance(s, Layered) and s.center == (0.0, 0.0):
                out.extend(s.radii)
            elif isinstance(s, Circle) and s.center == (0.0, 0.0):
                out.append(s.radius)
        return out


def contrast_at(material: MaterialMap, bg: Background, frequency: float, x, y):
    """Object function chi = k^2 / k_b^2 - 1 at the given points."""
    eps, sig = material.materials(x, y, bg)
    kb = wavenumber(bg, frequency)
    k = complex_wavenumber(eps, sig, frequency)
    chi = k * k / (kb * kb) - 1.0
    same = (eps == bg.eps_r) & (sig == bg.sigma)
    return np.where(same, 0.0, chi)


def max_cell_size(eps_r_max: float, frequency: float, feature: float, mu_r: float = 1.0) -> float:
    """Largest admissible cell: min(lambda_min / 10, feature / 2)."""
    if eps_r_max < 1 or feature <= 0:
        raise ConfigError("need eps_r_max >= 1 and a positive feature size")
    lam_min = (C0 / frequency) / math.sqrt(mu_r * eps_r_max)
    return min(lam_min / 10.0, feature / 2.0)


def incident_field(k_b: complex, x, y=None):
    """Unit plane wave exp(-j k_b x) travelling along +x."""
    return np.exp(-1j * k_b * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class PolarGrid:
    """Rings of (possibly variable) thickness about the origin.

    Angular samples sit at cell centres phi_k = (k + 1/2) 2 pi / n_phi.
    """

    edges: np.ndarray
    n_phi: int

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e[0] != 0.0 or np.any(np.diff(e) <= 0):
            raise ConfigError("ring edges must start at 0 and increase")
        if self.n_phi < 2 or self.n_phi & (self.n_phi - 1):
            raise ConfigError("n_phi must be a power of two")
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, radius: float, n_rings: int, n_phi: int) -> "PolarGrid":
        return cls(np.linspace(0.0, radius, n_rings + 1), n_phi)

    @property
    def radius(self) -> float:
        return float(self.edges[-1])

    @property
    def n_rings(self) -> int:
        return self.edges.size - 1

    @property
    def delta(self) -> float:
        return float(np.max(np.diff(self.edges)))

    @property
    def mids(self) -> np.ndarray:
        return self.edges[1:] - np.diff(self.edges) / 2

    @property
    def phis(self) -> np.ndarray:
        return (np.arange(self.n_phi) + 0.5) * 2 * np.pi / self.n_phi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rings, self.n_phi)

    def centers(self):
        r, p = np.meshgrid(self.mids, self.phis, indexing="ij")
        return r * np.cos(p), r * np.sin(p)

    def cell_areas(self) -> np.ndarray:
        ring = np.pi * (self.edges[1:] ** 2 - self.edges[:-1] ** 2) / self.n_phi
        return np.repeat(ring[:, None], self.n_phi, axis=1)


@dataclass(frozen=True)
class CartesianGrid:
    """nx x ny square cells; ``origin`` is the lower-left corner."""

    nx: int
    ny: int
    delta: float
    origin: tuple[float, float]

    @classmethod
    def centered(cls, nx: int, ny: int, delta: float) -> "CartesianGrid":
        return cls(nx, ny, delta, (-nx * delta / 2, -ny * delta / 2))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def centers(self):
        x = self.origin[0] + (np.arange(self.nx) + 0.5) * self.delta
        y = self.origin[1] + (np.arange(self.ny) + 0.5) * self.delta
        return np.meshgrid(x, y, indexing="ij")

    def covers(self, radius: float) -> bool:
        x0, y0 = self.origin
        return (x0 <= -radius and y0 <= -radius
                and x0 + self.nx * self.delta >= radius
                and y0 + self.ny * self.delta >= radius)

    def bounding_radius(self) -> float:
        x0, y0 = self.origin
        x1, y1 = x0 + self.nx * self.delta, y0 + self.ny * self.delta
        return max(math.hypot(a, b) for a in (x0, x1) for b in (y0, y1))


@dataclass(frozen=True)
class ObservationCircle:
    radius: float
    n_samples: int = 360

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_samples) * 2 * np.pi / self.n_samples

    def points(self):
        a = self.angles
        return self.radius * np.cos(a), self.radius * np.sin(a)


def sample_contrast_polar(material: MaterialMap, grid: PolarGrid, bg: Background, frequency: float,
                          subsamples: int = 1):
    """chi on the polar cells, shape (n_rings, n_phi).

    ``subsamples = s > 1`` averages chi over an s x s midpoint rule in
    (rho, phi) weighted by area; ``s = 1`` samples the cell centres.
    """
    if material.support_radius() > grid.radius * (1 + 1e-12):
        raise ConfigError("object extends beyond the embedding disk")
    if subsamples <= 1:
        x, y = grid.centers()
        return contrast_at(material, bg, frequency, x, y)
    t = (np.arange(subsamples) + 0.5) / subsamples
    e = grid.edges
    rho = e[:-1, None] + np.diff(e)[:, None] * t[None, :]          # (M, s)
    dphi = 2 * np.pi / grid.n_phi
    phi = grid.phis[:, None] + (t[None, :] - 0.5) * dphi            # (N, s)
    R = rho[:, None, :, None]
    P = phi[None, :, None, :]
    chi = contrast_at(material, bg, frequency, R * np.cos(P), R * np.sin(P))
    w = np.broadcast_to(R, chi.shape)
    return (chi * w).sum(axis=(2, 3)) / w.sum(axis=(2, 3))


def sample_contrast_cartesian(material: MaterialMap, grid: CartesianGrid, bg: Background, frequency: float,
                              subsamples: int = 1):
    """chi on the Cartesian cells, shape (nx, ny); averaging as for the polar grid."""
    if not grid.covers(material.support_radius() * (1 - 1e-12)):
        raise ConfigError("object extends beyond the Cartesian embedding rectangle")
    x, y = grid.centers()
    if subsamples <= 1:
        return contrast_at(material, bg, frequency, x, y)
    off = ((np.arange(subsamples) + 0.5) / subsamples - 0.5) * grid.delta
    X = x[:, :, None, None] + off[None, None, :, None]
    Y = y[:, :, None, None] + off[None, None, None, :]
    return contrast_at(material, bg, frequency, X, Y).mean(axis=(2, 3))


# ---------------------------------------------------------------------------
# automatic discretisation


def _next_pow2(v: float) -> int:
    return 1 << max(1, math.ceil(math.log2(max(v, 2.0))))


def auto_n_phi(k_b: complex, radius: float, eps_r_max: float, delta: float) -> int:
    """Power-of-two angular sample count covering the harmonics |n| <= k_max a + 8
    and keeping the rim arc no longer than ``delta``."""
    need = max(2 * math.ceil(abs(k_b) * radius * math.sqrt(eps_r_max)) + 16, 2 * math.pi * radius / delta)
    return _next_pow2(need)


def aligned_ring_count(radius: float, max_delta: float, interfaces: Sequence[float] = ()) -> int:
    """Smallest ring count with thickness <= max_delta whose edges hit the
    given concentric interfaces, if such a count exists within 4x the minimum."""
    m0 = max(1, math.ceil(radius / max_delta - 1e-9))
    ratios = [r / radius for r in interfaces if 0 < r < radius]
    if not ratios:
        return m0
    for m in range(m0, 4 * m0 + 1):
        if all(abs(q * m - round(q * m)) < 1e-6 for q in ratios):
            return m
    return m0


@dataclass(frozen=True)
class Discretization:
    polar: PolarGrid
    cartesian: CartesianGrid
    delta: float
    delta_bound: float

    @property
    def violates_bound(self) -> bool:
        return self.delta > self.delta_bound * (1 + 1e-9)


def discretize(material: MaterialMap, bg: Background, frequency: float, cell_size: float | None = None,
               feature: float | None = None, n_phi: int | None = None,
               radius: float | None = None) -> Discretization:
    """Build matching polar and Cartesian grids for a material map.

    The target cell size is ``cell_size`` if given, otherwise the
    min(lambda_min/10, feature/2) rule.  The Cartesian grid uses it exactly.
    The polar grid keeps the embedding radius at the object radius and takes
    the smallest ring count whose thickness does not exceed the target,
    bumped so concentric interfaces fall on ring edges.
    """
    R = material.support_radius() if radius is None else radius
    if R <= 0:
        R = 0.5 * wavelength(frequency) / 10.0 if cell_size is None else cell_size
    eps_max = material.max_eps(bg)
    kb = wavenumber(bg, frequency)
    feat = feature if feature is not None else material.feature_size()
    bound = max_cell_size(eps_max, frequency, feat if math.isfinite(feat) else 1e300)
    delta = bound if cell_size is None else float(cell_size)
    m = aligned_ring_count(R, delta, material.concentric_radii())
    a = R
    nphi = n_phi or auto_n_phi(kb, a, eps_max, a / m)
    polar = PolarGrid.uniform(a, m, nphi)
    support = material.support_radius()
    n_cart = max(1, math.ceil(2 * support / delta - 1e-9))
    cart = CartesianGrid.centered(n_cart, n_cart, delta)
    return Discretization(polar, cart, delta, bound)


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-4
    max_iter: int = 500


@dataclass(frozen=True)
class Scenario:
    name: str
    frequency: float
    background: Background
    material: MaterialMap
    cell_size: float | None = None
    feature_size: float | None = None
    n_phi: int | None = None
    radius: float | None = None
    obs_radius: float | None = None
    obs_radius_factor: float = 3.0
    obs_samples: int = 360
    subsamples: int = 1
    solver: SolverSettings = field(default_factory=SolverSettings)

    @property
    def k_b(self) -> complex:
        return wavenumber(self.background, self.frequency)

    def discretize(self, cell_size: float | None = None) -> Discretization:
        cs = self.cell_size if cell_size is None else cell_size
        return discretize(self.material, self.background, self.frequency, cs,
                          self.feature_size, self.n_phi, self.radius)

    def observation(self, disc: Discretization) -> ObservationCircle:
        support = self.material.support_radius()
        r = self.obs_radius if self.obs_radius is not None else self.obs_radius_factor * support
        if r <= 0:
            r = 3 * disc.polar.radius
        if r <= disc.polar.radius:
            raise ConfigError("observation circle must lie outside the embedding disk")
        return ObservationCircle(r, self.obs_samples)

    def with_material(self, material: MaterialMap) -> "Scenario":
        from dataclasses import replace
        return replace(self, material=material)
