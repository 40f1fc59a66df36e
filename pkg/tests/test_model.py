import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarmom import model
from polarmom.model import (Background, CartesianGrid, Circle, ConfigError, Layered, MaterialMap,
                            ObservationCircle, PolarGrid, Rectangle)

FREQ = 1.2e9


def test_wavenumber_examples(kb):
    assert kb.real == pytest.approx(2 * math.pi * FREQ / 3e8, rel=1e-9)
    assert kb.real == pytest.approx(25.1327, abs=1e-4)
    assert kb.imag == 0
    assert model.wavenumber(Background(4.0), FREQ) == pytest.approx(2 * kb, rel=1e-14)


def test_lossy_background_decays():
    k = model.wavenumber(Background(2.0, 0.1), FREQ)
    assert k.real > 0 and k.imag < 0
    w = 2 * math.pi * FREQ
    mu0, eps0 = 4e-7 * math.pi, 1 / (4e-7 * math.pi * 3e8 ** 2)
    assert k * k == pytest.approx(w * w * mu0 * eps0 * 2.0 - 1j * w * mu0 * 0.1, rel=1e-6)


def test_contrast_examples():
    bg = Background()
    mat = MaterialMap((Circle((0.0, 0.0), 0.1, 2.56),))
    assert model.contrast_at(mat, bg, FREQ, 0.5, 0.0) == 0
    assert model.contrast_at(mat, bg, FREQ, 0.0, 0.0) == pytest.approx(1.56, rel=1e-12)
    muscle = MaterialMap((Circle((0.0, 0.0), 0.1, 45.0),))
    assert model.contrast_at(muscle, bg, FREQ, 0.01, 0.02) == pytest.approx(44.0, rel=1e-12)
    lossy = MaterialMap((Circle((0.0, 0.0), 0.1, 45.0, 1.0),))
    chi = model.contrast_at(lossy, bg, FREQ, 0.0, 0.0)
    assert chi.real == pytest.approx(44.0) and chi.imag < 0


def test_max_cell_size_examples():
    assert model.max_cell_size(1.0, FREQ, 1e9) == pytest.approx(0.025, rel=1e-3)
    assert model.max_cell_size(45.0, FREQ, 1e9) == pytest.approx(3.73e-3, rel=1e-3)
    assert model.max_cell_size(1.0, FREQ, 4e-3) == pytest.approx(2e-3)
    with pytest.raises(ConfigError):
        model.max_cell_size(0.5, FREQ, 1.0)


@given(e1=st.floats(1.0, 100.0), e2=st.floats(1.0, 100.0), d1=st.floats(1e-4, 1.0), d2=st.floats(1e-4, 1.0))
def test_max_cell_size_monotone(e1, e2, d1, d2):
    lo_e, hi_e = sorted((e1, e2))
    lo_d, hi_d = sorted((d1, d2))
    assert model.max_cell_size(hi_e, FREQ, lo_d) <= model.max_cell_size(lo_e, FREQ, hi_d)


def test_incident_field_examples(kb, lam):
    assert model.incident_field(kb, 0.0) == 1
    assert model.incident_field(kb, lam / 2) == pytest.approx(-1 + 0j, abs=1e-12)
    x = np.linspace(-1, 1, 17)
    np.testing.assert_allclose(np.abs(model.incident_field(kb, x)), 1.0, rtol=1e-14)


def test_polar_grid_geometry():
    g = PolarGrid.uniform(0.3, 6, 16)
    np.testing.assert_allclose(g.edges, np.arange(7) * 0.05, atol=1e-15)
    np.testing.assert_allclose(g.mids, g.edges[1:] - 0.025)
    assert g.shape == (6, 16)
    np.testing.assert_allclose(g.phis, (np.arange(16) + 0.5) * 2 * np.pi / 16)
    assert g.cell_areas().sum() == pytest.approx(math.pi * 0.09, rel=1e-12)
    with pytest.raises(ConfigError):
        PolarGrid.uniform(0.3, 6, 12)
    with pytest.raises(ConfigError):
        PolarGrid(np.array([0.1, 0.2]), 8)


def test_cartesian_grid_geometry():
    g = CartesianGrid.centered(4, 6, 0.1)
    x, y = g.centers()
    assert x.shape == (4, 6)
    assert x.mean() == pytest.approx(0) and y.mean() == pytest.approx(0)
    assert g.covers(0.2) and not g.covers(0.21)


def test_sample_contrast_background_only():
    g = PolarGrid.uniform(0.2, 5, 16)
    chi = model.sample_contrast_polar(MaterialMap(), g, Background(), FREQ)
    assert not np.any(chi)
    cg = CartesianGrid.centered(5, 5, 0.04)
    assert not np.any(model.sample_contrast_cartesian(MaterialMap(), cg, Background(), FREQ))


def test_sample_contrast_layered_constant_per_ring(lam):
    mat = MaterialMap((Layered((0.0, 0.0), (0.2 * lam, 0.4 * lam), (1.5, 3.0), (0.0, 0.0)),))
    g = PolarGrid.uniform(0.4 * lam, 8, 32)
    chi = model.sample_contrast_polar(mat, g, Background(), FREQ)
    np.testing.assert_array_equal(chi, np.broadcast_to(chi[:, :1], chi.shape))
    np.testing.assert_allclose(chi[:4, 0], 0.5)
    np.testing.assert_allclose(chi[4:, 0], 2.0)


def test_sample_contrast_square_area(lam):
    side = lam / 2
    mat = MaterialMap((Rectangle((0.0, 0.0), side, side, 2.56),))
    R = side / math.sqrt(2)
    g = PolarGrid.uniform(R, 20, 128)
    chi = model.sample_contrast_polar(mat, g, Background(), FREQ)
    area = g.cell_areas()
    inside = area[chi != 0].sum()
    assert abs(inside - side * side) <= 4 * side * g.delta


def test_sample_contrast_object_outside_disk():
    mat = MaterialMap((Circle((0.0, 0.0), 0.3, 2.0),))
    with pytest.raises(ConfigError):
        model.sample_contrast_polar(mat, PolarGrid.uniform(0.2, 4, 16), Background(), FREQ)
    with pytest.raises(ConfigError):
        model.sample_contrast_cartesian(mat, CartesianGrid.centered(4, 4, 0.1), Background(), FREQ)


@given(step=st.integers(0, 15), r0=st.floats(0.02, 0.1), ang=st.floats(0, 2 * math.pi))
def test_rotating_the_map_rolls_the_samples(step, r0, ang):
    n_phi = 16
    g = PolarGrid.uniform(0.2, 6, n_phi)

    def disks(rot):
        return MaterialMap(tuple(
            Circle((r0 * math.cos(a + rot), r0 * math.sin(a + rot)), 0.05, eps)
            for a, eps in ((ang, 2.0), (ang + 2.0, 5.0))))

    base = model.sample_contrast_polar(disks(0.0), g, Background(), FREQ)
    rot = model.sample_contrast_polar(disks(step * 2 * math.pi / n_phi), g, Background(), FREQ)
    np.testing.assert_allclose(rot, np.roll(base, step, axis=1), atol=1e-12)


def test_rotationally_symmetric_map_is_rotation_invariant(lam):
    g = PolarGrid.uniform(0.4 * lam, 8, 32)
    mat = MaterialMap((Layered((0.0, 0.0), (0.2 * lam, 0.4 * lam), (1.5, 3.0), (0.0, 0.0)),))
    chi = model.sample_contrast_polar(mat, g, Background(), FREQ)
    np.testing.assert_array_equal(np.roll(chi, 5, axis=1), chi)


def test_subsample_averaging_fills_partial_cells():
    mat = MaterialMap((Circle((0.0, 0.0), 0.1, 2.0),))
    g = PolarGrid.uniform(0.1, 1, 8)
    cg = CartesianGrid.centered(1, 1, 0.2)
    # a single Cartesian cell enclosing the disk holds the area fraction pi/4 of chi
    avg = model.sample_contrast_cartesian(mat, cg, Background(), FREQ, subsamples=64)
    assert avg[0, 0].real == pytest.approx(math.pi / 4, rel=2e-2)
    np.testing.assert_allclose(model.sample_contrast_polar(mat, g, Background(), FREQ, subsamples=4), 1.0)


def test_auto_discretization(lam):
    mat = MaterialMap((Layered((0.0, 0.0), (0.2 * lam, 0.4 * lam), (1.5, 3.0), (0.0, 0.0)),))
    d = model.discretize(mat, Background(), FREQ)
    assert d.delta == pytest.approx(lam / math.sqrt(3) / 10)
    assert d.polar.radius == pytest.approx(0.4 * lam)
    assert d.polar.delta <= d.delta * (1 + 1e-12)
    # both interfaces sit on ring edges
    assert np.min(np.abs(d.polar.edges - 0.2 * lam)) < 1e-12
    n = d.polar.n_phi
    k = 2 * math.pi / lam
    need = max(2 * math.ceil(k * 0.4 * lam * math.sqrt(3.0)) + 16, 2 * math.pi * 0.4 * lam / d.polar.delta)
    assert n >= need and n // 2 < need and n & (n - 1) == 0
    assert d.cartesian.covers(0.4 * lam)
    assert d.cartesian.delta == d.delta
    assert not d.violates_bound
    assert model.discretize(mat, Background(), FREQ, cell_size=2 * d.delta).violates_bound


def test_aligned_ring_count():
    assert model.aligned_ring_count(1.0, 0.3) == 4
    assert model.aligned_ring_count(1.0, 0.3, [0.5]) == 4
    assert model.aligned_ring_count(1.0, 0.3, [1 / 3]) == 6


def test_observation_circle_outside_disk(lam):
    from polarmom.scenarios import resolve_scenario
    sc = resolve_scenario("two-layer")
    disc = sc.discretize()
    circle = sc.observation(disc)
    assert circle.radius == pytest.approx(3 * 0.4 * lam)
    bad = sc.__class__(**{**sc.__dict__, "obs_radius": 0.3 * lam})
    with pytest.raises(ConfigError):
        bad.observation(disc)
    c = ObservationCircle(1.0, 8)
    x, y = c.points()
    np.testing.assert_allclose(np.hypot(x, y), 1.0)
