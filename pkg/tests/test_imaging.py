"""Tests for the imaging maps: adjoint engine, normalized maps, kernel models."""

import math

import numpy as np
import pytest

from thinimage.errors import ConfigError, FlatMapError, GeometryError
from thinimage.forward import (
    BoundaryDataset,
    IncidentSet,
    frequency_band,
    neumann_function,
    standard_directions,
    synthesize,
)
from thinimage.geometry import (
    ParametricCurve,
    ThinInclusion,
    boundary_grid,
    builtin_curve,
    discretize,
)
from thinimage.imaging import (
    adjoint_field,
    adjoint_field_batch,
    band_kernel_maps,
    etd_multi,
    etd_single,
    inverse_distance_maps,
    normalized_combination,
    radial_band_maps,
    single_frequency_kernel_maps,
    td_component_maps,
)
from thinimage.maps import (
    make_lattice,
    masked_correlation,
    top_quantile_distance,
)
from thinimage.special import spherical_j0

OMEGA = 4.0 * math.pi


@pytest.fixture(scope="module")
def grid():
    return boundary_grid(128)


@pytest.fixture(scope="module")
def sigma1():
    curve = builtin_curve("sigma1")
    return curve, discretize(curve, 400)


@pytest.fixture(scope="module")
def clean16(grid, sigma1):
    """Clean full-contrast dataset, 16 directions, 16 band frequencies."""
    curve, _ = sigma1
    incident = IncidentSet(standard_directions(16), frequency_band(16))
    return synthesize([ThinInclusion(curve)], incident, grid)


@pytest.fixture(scope="module")
def multi_map(clean16):
    return etd_multi(clean16, make_lattice(128))


@pytest.fixture(scope="module")
def random_traces(grid):
    rng = np.random.default_rng(42)
    shape = (grid.n_points, 3)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestAdjointField:
    def test_matches_direct_boundary_quadrature(self, grid, random_traces):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-0.6, 0.6, size=(6, 2))
        v = adjoint_field_batch(random_traces, grid, OMEGA, pts)
        boundary = grid.points
        for i, z in enumerate(pts):
            kern = np.array([neumann_function(z, y, OMEGA) for y in boundary])
            ref = (2.0 * math.pi / grid.n_points) * (kern @ random_traces)
            assert np.max(np.abs(v[i] - ref)) / np.max(np.abs(ref)) < 1e-8

    def test_gradient_matches_finite_differences(self, grid, random_traces):
        rng = np.random.default_rng(11)
        step = 1e-5
        worst = 0.0
        for _ in range(20):
            z = rng.uniform(-0.65, 0.65, size=2)
            _, gv = adjoint_field(random_traces, grid, OMEGA, z, gradient=True)
            fd = np.empty_like(gv)
            for axis in range(2):
                dz = np.zeros(2)
                dz[axis] = step
                vp = adjoint_field(random_traces, grid, OMEGA, z + dz)
                vm = adjoint_field(random_traces, grid, OMEGA, z - dz)
                fd[:, axis] = (vp - vm) / (2.0 * step)
            worst = max(worst, np.max(np.abs(gv - fd)) / np.max(np.abs(gv)))
        assert worst < 1e-5

    def test_zero_data_gives_zero(self, grid):
        zero = np.zeros((grid.n_points, 2), dtype=complex)
        v, gv = adjoint_field(zero, grid, OMEGA, (0.3, -0.1), gradient=True)
        assert np.all(v == 0.0)
        assert np.all(gv == 0.0)

    def test_linearity(self, grid, random_traces):
        rng = np.random.default_rng(13)
        other = rng.standard_normal(random_traces.shape) * 1j
        z = (0.12, 0.4)
        v_sum = adjoint_field(random_traces + other, grid, OMEGA, z)
        v_parts = adjoint_field(random_traces, grid, OMEGA, z) + adjoint_field(
            other, grid, OMEGA, z
        )
        assert np.max(np.abs(v_sum - v_parts)) < 1e-12 * np.max(np.abs(v_sum))

    def test_center_gradient_is_continuous(self, grid, random_traces):
        _, g0 = adjoint_field(random_traces, grid, OMEGA, (0.0, 0.0), gradient=True)
        _, g1 = adjoint_field(random_traces, grid, OMEGA, (1e-7, 0.0), gradient=True)
        assert np.max(np.abs(g0 - g1)) / np.max(np.abs(g0)) < 1e-4

    def test_rim_points_rejected(self, grid, random_traces):
        with pytest.raises(GeometryError):
            adjoint_field(random_traces, grid, OMEGA, (0.9999, 0.0))


class TestComponentMaps:
    def test_zero_dataset_gives_zero_maps(self, grid):
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = BoundaryDataset(
            np.zeros((grid.n_points, 4, 1), dtype=complex), grid, incident
        )
        lattice = make_lattice(24)
        eps_map, mu_map = td_component_maps(data, lattice)
        assert np.all(eps_map.values == 0.0)
        assert np.all(mu_map.values == 0.0)

    def test_real_scaling_scales_maps(self, grid, sigma1):
        curve, _ = sigma1
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = synthesize([ThinInclusion(curve)], incident, grid)
        scaled = BoundaryDataset(2.5 * data.traces, grid, incident)
        lattice = make_lattice(24)
        e1, m1 = td_component_maps(data, lattice)
        e2, m2 = td_component_maps(scaled, lattice)
        assert np.allclose(e2.values, 2.5 * e1.values, rtol=1e-12, atol=0.0)
        assert np.allclose(m2.values, 2.5 * m1.values, rtol=1e-12, atol=0.0)

    def test_frequency_index_checked(self, clean16):
        with pytest.raises(IndexError):
            td_component_maps(clean16, make_lattice(16), k_index=16)


class TestNormalizedMaps:
    def test_each_component_peaks_at_exactly_one(self, clean16):
        lattice = make_lattice(48)
        eps_map, mu_map = td_component_maps(clean16, lattice)
        for component in (eps_map, mu_map):
            scaled = component.inside_values / np.max(np.abs(component.inside_values))
            assert np.max(np.abs(scaled)) == 1.0

    def test_combination_bounded_by_one(self, clean16):
        emap = etd_single(clean16, make_lattice(48))
        assert np.max(np.abs(emap.values)) <= 1.0

    def test_dataset_scaling_leaves_map_invariant_up_to_sign(self, clean16):
        lattice = make_lattice(32)
        base = etd_single(clean16, lattice)
        scaled_data = BoundaryDataset(
            -3.7 * clean16.traces, clean16.grid, clean16.incident
        )
        flipped = etd_single(scaled_data, lattice)
        assert np.allclose(flipped.values, -base.values, rtol=1e-11, atol=1e-13)

    def test_zero_contrast_data_raises_flat(self, grid, sigma1):
        curve, _ = sigma1
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = synthesize(
            [ThinInclusion(curve, eps=1.0, mu=1.0)], incident, grid
        )
        with pytest.raises(FlatMapError):
            etd_single(data, make_lattice(16))

    def test_flat_component_raises_directly(self, clean16):
        lattice = make_lattice(16)
        eps_map, _ = td_component_maps(clean16, lattice)
        from thinimage.maps import from_point_values

        flat = from_point_values(lattice, np.zeros(lattice.points.shape[0]))
        with pytest.raises(FlatMapError):
            normalized_combination(eps_map, flat)


class TestMultiFrequency:
    def test_single_band_reduces_bitwise(self, grid, sigma1):
        curve, _ = sigma1
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = synthesize([ThinInclusion(curve)], incident, grid)
        lattice = make_lattice(32)
        assert np.array_equal(
            etd_multi(data, lattice).values, etd_single(data, lattice).values
        )

    def test_multi_map_bounded(self, multi_map):
        assert np.max(np.abs(multi_map.values)) <= 1.0

    def test_clean_localization(self, multi_map, sigma1):
        _, disc = sigma1
        assert top_quantile_distance(multi_map, disc) <= 0.1

    def test_sidelobe_minima_flank_the_curve(self, multi_map):
        # normal line through the curve midpoint (-0.2, 0.5) is vertical
        xs = np.linspace(-1.0, 1.0, multi_map.lattice.shape[1])
        ys = np.linspace(-1.0, 1.0, multi_map.lattice.shape[0])
        column = multi_map.values[:, int(np.argmin(np.abs(xs + 0.2)))]
        above = column[(ys > 0.5) & (ys <= 0.68)]
        below = column[(ys < 0.5) & (ys >= 0.32)]
        assert above.min() < 0.0
        assert below.min() < 0.0


class TestKernelModels:
    def test_single_frequency_matches_brute_force(self, sigma1):
        curve, disc = sigma1
        inclusion = ThinInclusion(curve)
        directions = standard_directions(8)
        lattice = make_lattice(16)
        eps_map, mu_map = single_frequency_kernel_maps(
            lattice, disc, inclusion, directions, OMEGA
        )
        alpha = 2.0 * (1.0 / inclusion.mu - 1.0 / inclusion.mu0)
        beta = 2.0 * (1.0 / inclusion.mu0 - inclusion.mu / inclusion.mu0**2)
        rng = np.random.default_rng(5)
        for i in rng.choice(lattice.points.shape[0], 5, replace=False):
            z = lattice.points[i]
            eps_ref = 0.0
            mu_ref = 0.0
            for d in directions:
                phase = np.exp(1j * OMEGA * ((disc.nodes - z) @ d))
                eps_ref += np.real(
                    np.sum(disc.weights * (inclusion.eps - inclusion.eps0) * phase)
                )
                bracket = alpha * (disc.tangents @ d) + beta * (disc.normals @ d)
                mu_ref += np.real(np.sum(disc.weights * bracket * phase))
            assert abs(eps_map.inside_values[i] - eps_ref) < 1e-10 * max(1.0, abs(eps_ref))
            assert abs(mu_map.inside_values[i] - mu_ref) < 1e-10 * max(1.0, abs(mu_ref))

    def test_band_kernel_profile_peaks_at_origin(self):
        x = np.linspace(-4.0, 4.0, 4001)
        y = spherical_j0(2.0 * x) * np.cos(10.0 * x)
        assert y[2000] == 1.0
        assert np.argmax(y) == 2000

    def test_band_requires_increasing_edges(self, sigma1):
        curve, disc = sigma1
        lattice = make_lattice(8)
        with pytest.raises(ConfigError):
            band_kernel_maps(
                lattice, disc, ThinInclusion(curve), standard_directions(4), OMEGA, OMEGA
            )

    def test_radial_band_short_curve_limit(self):
        # a 0.02-long flat segment through the origin: the kernel is nearly
        # its value at zero separation, the band width times 2 pi
        seg = ParametricCurve(
            "segment",
            -0.01,
            0.01,
            fx=lambda s: np.asarray(s, dtype=float),
            fy=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            dfx=lambda s: np.ones_like(np.asarray(s, dtype=float)),
            dfy=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        )
        disc = discretize(seg, 50)
        inclusion = ThinInclusion(seg)
        lattice = make_lattice(17)
        lo, hi = frequency_band(16)[0], frequency_band(16)[-1]
        eps_map, _ = radial_band_maps(
            lattice, disc, inclusion, standard_directions(4), lo, hi
        )
        center = np.argmin(np.hypot(lattice.points[:, 0], lattice.points[:, 1]))
        length = float(np.sum(disc.weights))
        expected = 2.0 * math.pi * (inclusion.eps - inclusion.eps0) * length * (hi - lo)
        assert abs(eps_map.inside_values[center] - expected) < 0.05 * expected

    def test_inverse_distance_far_bound(self, sigma1):
        curve, disc = sigma1
        inclusion = ThinInclusion(curve)
        lattice = make_lattice(64)
        eps_map, _ = inverse_distance_maps(
            lattice, disc, inclusion, standard_directions(4)
        )
        dists = np.min(
            np.hypot(
                lattice.points[:, None, 0] - disc.nodes[None, :, 0],
                lattice.points[:, None, 1] - disc.nodes[None, :, 1],
            ),
            axis=1,
        )
        far = dists >= 1.0
        assert np.any(far)
        bound = 2.0 * math.pi * (inclusion.eps - inclusion.eps0) * np.sum(disc.weights)
        assert np.max(eps_map.inside_values[far]) <= bound * (1.0 + 1e-12)

    def test_inverse_distance_decays_along_ray(self, sigma1):
        curve, disc = sigma1
        inclusion = ThinInclusion(curve)
        lattice = make_lattice(128)
        eps_map, _ = inverse_distance_maps(
            lattice, disc, inclusion, standard_directions(4)
        )
        xs = np.linspace(-1.0, 1.0, 128)
        ys = np.linspace(-1.0, 1.0, 128)
        column = eps_map.values[:, int(np.argmin(np.abs(xs + 0.2)))]
        ray = column[(ys <= 0.25) & (ys >= -0.5)][::-1]  # walking away downward
        assert np.all(np.diff(ray) < 0.0)


class TestOracleConsistency:
    def test_direction_sum_approaches_bessel(self):
        from scipy.special import jv

        directions = standard_directions(64)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.6, 0.6, size=(50, 2))
        arg = OMEGA * np.hypot(pts[:, 0], pts[:, 1])
        keep = arg <= 8.0
        lattice_sum = (2.0 * math.pi / 64) * np.sum(
            np.exp(1j * OMEGA * pts @ directions.T), axis=1
        )
        reference = 2.0 * math.pi * jv(0, arg)
        rel = np.abs(lattice_sum - reference) / np.max(np.abs(reference))
        assert np.max(rel[keep]) < 0.02

    def test_band_map_tracks_frequency_sum(self, sigma1):
        curve, _ = sigma1
        disc = discretize(curve, 150)
        inclusion = ThinInclusion(curve)
        directions = standard_directions(16)
        band = frequency_band(16)
        lattice = make_lattice(32)
        e1, _ = band_kernel_maps(lattice, disc, inclusion, directions, band[0], band[-1])
        acc = np.zeros(lattice.points.shape[0])
        for omega_k in band:
            ek, _ = single_frequency_kernel_maps(
                lattice, disc, inclusion, directions, omega_k
            )
            acc += ek.inside_values
        from thinimage.maps import from_point_values

        mean_map = from_point_values(lattice, acc / band.size)
        assert masked_correlation(e1, mean_map) >= 0.9

    def test_radial_band_tracks_band_kernel(self, sigma1):
        curve, _ = sigma1
        disc = discretize(curve, 150)
        inclusion = ThinInclusion(curve)
        directions = standard_directions(64)
        band = frequency_band(16)
        lattice = make_lattice(32)
        e1, _ = band_kernel_maps(lattice, disc, inclusion, directions, band[0], band[-1])
        e3, _ = radial_band_maps(lattice, disc, inclusion, directions, band[0], band[-1])
        assert masked_correlation(e3, e1) >= 0.9
