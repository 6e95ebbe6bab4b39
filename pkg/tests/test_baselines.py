"""Tests for the multistatic matrix and the subspace/migration baselines."""

import math

import numpy as np
import pytest

from thinimage.errors import ConfigError, DataStateError
from thinimage.forward import (
    BoundaryDataset,
    IncidentSet,
    assemble_multistatic,
    point_scatterer_matrix,
    standard_directions,
    synthesize,
)
from thinimage.geometry import ThinInclusion, boundary_grid, builtin_curve, discretize
from thinimage.baselines import (
    SteeringConfig,
    kirchhoff_map,
    multi_kirchhoff_map,
    music_map,
    signal_space_dim,
    steering_vectors,
)
from thinimage.maps import make_lattice

OMEGA = 4.0 * math.pi


@pytest.fixture(scope="module")
def sigma1_msr():
    curve = builtin_curve("sigma1")
    incident = IncidentSet(standard_directions(8), np.array([OMEGA]))
    grid = boundary_grid(128)
    data = synthesize([ThinInclusion(curve)], incident, grid)
    return assemble_multistatic(data), curve


@pytest.fixture(scope="module")
def three_monopoles():
    points = np.array([[0.4, 0.0], [-0.3, 0.2], [0.1, -0.45]])
    return point_scatterer_matrix(
        points, np.ones(3), standard_directions(16), 10.0 * math.pi
    ), points


class TestAssembly:
    def test_zero_dataset_gives_zero_matrix(self):
        grid = boundary_grid(64)
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = BoundaryDataset(
            np.zeros((64, 4, 1), dtype=complex), grid, incident
        )
        msr = assemble_multistatic(data)
        assert np.all(msr.matrix == 0.0)
        assert np.all(msr.singular_values == 0.0)

    def test_clean_matrix_is_complex_symmetric(self, sigma1_msr):
        msr, _ = sigma1_msr
        a = msr.matrix
        assert np.linalg.norm(a - a.T) / np.linalg.norm(a) <= 1e-8

    def test_matches_curve_quadrature_form(self, sigma1_msr):
        # observation row j integrates to h w^2 int [gamma - alpha (d_l.t)(d_j.t)
        # - beta (d_l.n)(d_j.n)] e^{i w (d_j + d_l).x} over the curve
        msr, curve = sigma1_msr
        disc = discretize(curve, 600)
        incl = ThinInclusion(curve)
        gamma = incl.eps - incl.eps0
        alpha = incl.tangential_contrast()
        beta = incl.normal_contrast()
        dirs = msr.directions
        expected = np.empty_like(msr.matrix)
        for j, dj in enumerate(dirs):
            for l, dl in enumerate(dirs):
                bracket = (
                    gamma
                    - alpha * (disc.tangents @ dl) * (disc.tangents @ dj)
                    - beta * (disc.normals @ dl) * (disc.normals @ dj)
                )
                phase = np.exp(1j * OMEGA * (disc.nodes @ (dj + dl)))
                expected[j, l] = (
                    incl.h * OMEGA**2 * np.sum(disc.weights * bracket * phase)
                )
        rel = np.linalg.norm(msr.matrix - expected) / np.linalg.norm(expected)
        assert rel <= 1e-6

    def test_monopole_matrix_rank(self, three_monopoles):
        msr, _ = three_monopoles
        s = msr.singular_values
        assert np.all(s[:3] > 1e-10 * s[0])
        assert np.all(s[3:] <= 1e-10 * s[0])
        assert np.allclose(msr.matrix, msr.matrix.T, rtol=0.0, atol=1e-14 * s[0])

    def test_frequency_index_checked(self, sigma1_msr):
        msr, curve = sigma1_msr
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = synthesize(
            [ThinInclusion(curve)], incident, boundary_grid(64)
        )
        with pytest.raises(IndexError):
            assemble_multistatic(data, k_index=1)


class TestSteering:
    def test_monopole_rows_have_flat_magnitude(self):
        dirs = standard_directions(8)
        w = steering_vectors(np.array([[0.3, -0.2]]), OMEGA, dirs)
        assert np.allclose(np.abs(w), 1.0 / math.sqrt(8), rtol=0.0, atol=1e-14)

    def test_origin_monopole_is_uniform(self):
        dirs = standard_directions(8)
        w = steering_vectors(np.array([[0.0, 0.0]]), OMEGA, dirs)
        assert np.allclose(w, 1.0 / math.sqrt(8), rtol=0.0, atol=1e-14)

    def test_rows_are_unit(self):
        dirs = standard_directions(12)
        cfg = SteeringConfig(c=(0.5, 1.0, -2.0))
        w = steering_vectors(np.array([[0.1, 0.2], [-0.4, 0.0]]), OMEGA, dirs, cfg)
        assert np.allclose(np.linalg.norm(w, axis=1), 1.0, rtol=0.0, atol=1e-13)

    def test_distinct_points_not_parallel(self):
        dirs = standard_directions(16)
        w = steering_vectors(np.array([[0.2, 0.1], [-0.2, -0.1]]), OMEGA, dirs)
        assert abs(np.vdot(w[0], w[1])) < 1.0 - 1e-6

    def test_zero_weights_rejected(self):
        with pytest.raises(ConfigError):
            SteeringConfig(c=(0.0, 0.0, 0.0))


class TestSignalSpace:
    def test_three_monopoles_give_three(self, three_monopoles):
        msr, _ = three_monopoles
        assert signal_space_dim(msr, drop_tol=1e-6) == 3

    def test_single_monopole_gives_one(self):
        msr = point_scatterer_matrix(
            np.array([[0.2, 0.3]]), np.ones(1), standard_directions(8), OMEGA
        )
        assert signal_space_dim(msr, drop_tol=1e-6) == 1

    def test_unit_drop_tol_keeps_only_leading(self, sigma1_msr):
        msr, _ = sigma1_msr
        assert signal_space_dim(msr, drop_tol=1.0) == 1

    def test_dimension_clamped_below_size(self, three_monopoles):
        msr, _ = three_monopoles
        assert signal_space_dim(msr, drop_tol=1e-300) == msr.n_directions - 1

    def test_zero_matrix_rejected(self):
        grid = boundary_grid(32)
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = BoundaryDataset(np.zeros((32, 4, 1), dtype=complex), grid, incident)
        with pytest.raises(DataStateError):
            signal_space_dim(assemble_multistatic(data))


class TestMusic:
    def test_values_at_least_one(self, three_monopoles):
        msr, _ = three_monopoles
        imap, _ = music_map(make_lattice(32), msr, signal_dim=3)
        inside = imap.inside_values
        assert np.all(inside[inside != 0.0] >= 1.0)

    def test_signal_direction_saturates(self):
        # monopole at the origin: its steering vector is exactly the signal
        # space, so the origin lattice point hits the projector kernel
        msr = point_scatterer_matrix(
            np.array([[0.0, 0.0]]), np.ones(1), standard_directions(8), OMEGA
        )
        lattice = make_lattice(9)
        imap, saturated = music_map(lattice, msr, signal_dim=1)
        assert saturated
        center = np.argmin(np.hypot(lattice.points[:, 0], lattice.points[:, 1]))
        assert imap.inside_values[center] == 1e12

    def test_full_signal_dim_rejected(self, three_monopoles):
        msr, _ = three_monopoles
        with pytest.raises(ConfigError):
            music_map(make_lattice(16), msr, signal_dim=msr.n_directions)

    def test_three_scatterers_localized_within_one_cell(self, three_monopoles):
        msr, points = three_monopoles
        lattice = make_lattice(64)
        imap, _ = music_map(lattice, msr, signal_dim=3)
        cell = lattice.spacing * math.sqrt(2.0)
        for p in points:
            dist = np.hypot(lattice.points[:, 0] - p[0], lattice.points[:, 1] - p[1])
            near = dist <= 0.2
            peak = lattice.points[near][np.argmax(imap.inside_values[near])]
            assert np.hypot(*(peak - p)) <= cell


class TestKirchhoff:
    def test_zero_matrix_gives_zero_map(self):
        grid = boundary_grid(32)
        incident = IncidentSet(standard_directions(4), np.array([OMEGA]))
        data = BoundaryDataset(np.zeros((32, 4, 1), dtype=complex), grid, incident)
        imap = kirchhoff_map(make_lattice(16), assemble_multistatic(data))
        assert np.all(imap.values == 0.0)

    def test_rank_one_identity(self):
        msr = point_scatterer_matrix(
            np.array([[0.25, -0.1]]), np.array([2.0]), standard_directions(8), OMEGA
        )
        lattice = make_lattice(16)
        imap = kirchhoff_map(lattice, msr)
        w = steering_vectors(lattice.points, msr.omega, msr.directions)
        s1 = msr.singular_values[0]
        u1 = msr.left_vectors[:, 0]
        v1h = msr.right_vectors_h[0]
        expected = s1 * np.abs(w.conj() @ u1) * np.abs(w @ v1h.conj())
        assert np.allclose(imap.inside_values, expected, rtol=1e-9, atol=1e-12 * s1)

    def test_single_scatterer_peak_within_one_cell(self):
        target = np.array([0.25, -0.1])
        msr = point_scatterer_matrix(
            target[None, :], np.ones(1), standard_directions(16), 10.0 * math.pi
        )
        lattice = make_lattice(64)
        imap = kirchhoff_map(lattice, msr)
        peak = lattice.points[np.argmax(imap.inside_values)]
        assert np.hypot(*(peak - target)) <= lattice.spacing * math.sqrt(2.0)

    def test_multi_sum_and_empty_guard(self):
        dirs = standard_directions(8)
        msr_a = point_scatterer_matrix(np.array([[0.2, 0.0]]), np.ones(1), dirs, OMEGA)
        msr_b = point_scatterer_matrix(np.array([[0.2, 0.0]]), np.ones(1), dirs, 1.5 * OMEGA)
        lattice = make_lattice(16)
        total = multi_kirchhoff_map(lattice, [msr_a, msr_b])
        parts = (
            kirchhoff_map(lattice, msr_a).inside_values
            + kirchhoff_map(lattice, msr_b).inside_values
        )
        assert np.allclose(total.inside_values, parts, rtol=1e-13, atol=0.0)
        with pytest.raises(ConfigError):
            multi_kirchhoff_map(lattice, [])
