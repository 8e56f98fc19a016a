import math

import numpy as np
from django.test import SimpleTestCase

from flipmode.detection import (
    detection_frame,
    detection_mode,
    dual_path,
    inject_detection_squeezing,
    multi_measurement_plan,
    overlap_coefficients,
    pixel_integrals,
    two_zone_basis,
    two_zone_decomposition,
    two_zone_variance_decomposition,
    variance_direct,
    variance_via_detection_mode,
)
from flipmode.errors import DegenerateMeasurement, InvalidLayout, InvalidParameter, NotADifferenceMeasurement
from flipmode.gaussian_state import (
    GaussianState,
    SqueezerSpec,
    basis_change,
    beam_splitter,
    degree,
    make_state,
    squeezed_block,
)
from flipmode.layouts import PixelLayout, annulus, half_x, half_y, quadrants
from flipmode.modes import ModeBasis, SampledMode, hermite_gauss_mode, overlap

from .fixtures import E_MINUS_2, N0, assert_relclose, coherent_state, hg_basis, random_state, small_grid


def random_layout(grid, rng, n_pixels=4, signs_only=True):
    labels = rng.integers(0, n_pixels, size=grid.shape)
    if signs_only:
        gains = rng.choice([-1.0, 1.0], size=n_pixels)
    else:
        gains = rng.normal(size=n_pixels)
    return PixelLayout(grid, labels, gains, name="random")


class PixelIntegralTests(SimpleTestCase):
    def test_displaced_beam_on_half_split(self):
        grid = small_grid(n=256)
        v0 = hermite_gauss_mode(0, 0, 1.0, grid, center=(0.5, 0.0))
        integrals = pixel_integrals(v0, half_x(grid, [1.0, 1.0]))
        np.testing.assert_allclose(integrals, [0.158655, 0.841345], atol=1e-3)
        self.assertAlmostEqual(float(integrals.sum()), 1.0, places=12)

    def test_quadrants_of_centered_beam(self):
        grid = small_grid()
        v0 = hermite_gauss_mode(0, 0, 1.0, grid)
        integrals = pixel_integrals(v0, quadrants(grid, [1.0, 1.0, 1.0, 1.0]))
        np.testing.assert_allclose(integrals, 0.25, atol=1e-12)

    def test_annulus_needs_ordered_radii(self):
        with self.assertRaises(InvalidLayout):
            annulus(small_grid(), 2.0, 1.0, [1.0, -1.0, 0.0])


class DetectionModeTests(SimpleTestCase):
    def test_balanced_split_is_flipped_mode(self):
        grid = small_grid()
        v0 = hermite_gauss_mode(0, 0, 1.0, grid)
        detection = detection_mode(v0, half_x(grid, [-1.0, 1.0]))
        x, _ = grid.mesh()
        self.assertTrue(detection.is_difference)
        self.assertAlmostEqual(detection.f, 1.0)
        np.testing.assert_allclose(detection.w1.amplitude, np.sign(x) * v0.amplitude, atol=1e-14)
        self.assertAlmostEqual(abs(overlap(detection.w1, v0)), 0.0, places=12)

    def test_uniform_gains_give_v0(self):
        grid = small_grid()
        v0 = hermite_gauss_mode(0, 0, 1.0, grid)
        detection = detection_mode(v0, quadrants(grid, [2.0, 2.0, 2.0, 2.0]))
        self.assertFalse(detection.is_difference)
        self.assertAlmostEqual(detection.f, 2.0)
        self.assertAlmostEqual(abs(overlap(detection.w1, v0)), 1.0, places=12)

    def test_zero_gain_on_support_is_degenerate(self):
        grid = small_grid()
        x, _ = grid.mesh()
        v0 = SampledMode(grid, np.where(x > 0, hermite_gauss_mode(0, 0, 1.0, grid).amplitude, 0.0))
        with self.assertRaises(DegenerateMeasurement):
            detection_mode(v0, half_x(grid, [1.0, 0.0]))


class VarianceTests(SimpleTestCase):
    def test_coherent_state_sits_at_shot_noise(self):
        basis = hg_basis()
        state = coherent_state(len(basis))
        rng = np.random.default_rng(11)
        for _ in range(10):
            layout = random_layout(basis.grid, rng)
            report = variance_direct(state, basis, layout)
            assert_relclose(report.variance, N0 * report.f ** 2, 1e-9)
            self.assertAlmostEqual(report.sql_ratio, 1.0, places=9)

    def test_dual_paths_agree_on_random_states(self):
        pool = hg_basis(max_order=3)
        rng = np.random.default_rng(1234)
        for _ in range(100):
            dim = int(rng.integers(2, 9))
            basis = ModeBasis(list(pool)[:dim])
            state = random_state(dim, rng)
            layout = random_layout(basis.grid, rng, n_pixels=int(rng.integers(2, 6)), signs_only=False)
            result = dual_path(state, basis, layout)
            self.assertTrue(result.agrees, result.relative_discrepancy)
            assert_relclose(result.direct.variance, result.via_detection_mode.variance, 1e-8)

    def test_squeezed_flipped_mode_beats_shot_noise(self):
        basis = hg_basis()
        state = coherent_state(len(basis))
        layout = half_x(basis.grid, [-1.0, 1.0])
        frame_basis, squeezed = inject_detection_squeezing(state, basis, layout, r=1.0)
        direct = variance_direct(squeezed, frame_basis, layout)
        via = variance_via_detection_mode(squeezed, frame_basis, layout)
        self.assertAlmostEqual(direct.sql_ratio, E_MINUS_2, delta=1e-6)
        self.assertAlmostEqual(via.sql_ratio, E_MINUS_2, delta=1e-6)
        self.assertAlmostEqual(direct.sql_ratio, 0.135335, places=6)

    def test_modes_orthogonal_to_detection_mode_do_not_matter(self):
        basis = hg_basis(max_order=3)
        layout = half_y(basis.grid, [-1.0, 1.0])
        frame = detection_frame(coherent_state(len(basis)), basis, layout)
        frame_basis = frame.basis(basis)
        baseline = variance_direct(frame.state, frame_basis, layout).variance

        rng = np.random.default_rng(99)
        others = [k for k in range(frame.state.dim) if k not in (frame.mean_slot, frame.detection_slot)]
        state = frame.state
        for k in rng.choice(others, size=5, replace=False):
            state = state.with_mode_block(int(k), squeezed_block(rng.uniform(0.2, 1.5), rng.uniform(0, math.pi)))
        changed = variance_direct(state, frame_basis, layout).variance
        assert_relclose(changed, baseline, 1e-9)

    def test_gain_scaling(self):
        basis = hg_basis()
        state = random_state(len(basis), np.random.default_rng(5))
        layout = quadrants(basis.grid, [1.0, -0.5, 0.3, -2.0])
        plain = variance_direct(state, basis, layout)
        scaled = variance_direct(state, basis, layout.scaled(3.0))
        assert_relclose(scaled.variance, 9.0 * plain.variance, 1e-10)
        assert_relclose(scaled.sql_ratio, plain.sql_ratio, 1e-10)

    def test_report_dict(self):
        basis = hg_basis()
        report = variance_direct(coherent_state(len(basis)), basis, half_x(basis.grid, [-1.0, 1.0]))
        data = report.to_dict("w1.csv")
        self.assertEqual(
            sorted(data),
            ["detection_mode_export_path", "f", "is_difference", "mean", "shot_noise", "sql_ratio", "variance"],
        )
        self.assertEqual(data["detection_mode_export_path"], "w1.csv")
        self.assertTrue(data["is_difference"])


class OverlapCoefficientTests(SimpleTestCase):
    def setUp(self):
        self.basis = hg_basis()
        self.state = coherent_state(len(self.basis))

    def frame(self, layout):
        frame = detection_frame(self.state, self.basis, layout)
        return frame, frame.basis(self.basis)

    def test_difference_measurement_loads_only_the_flipped_slot(self):
        layout = half_x(self.basis.grid, [-1.0, 1.0])
        frame, frame_basis = self.frame(layout)
        coefficients = overlap_coefficients(frame.state, frame_basis, layout)
        expected = np.zeros(frame.state.dim)
        expected[frame.detection_slot] = math.sqrt(N0)
        np.testing.assert_allclose(np.abs(coefficients), expected, atol=1e-6 * math.sqrt(N0))

    def test_squared_coefficients_sum_to_shot_noise(self):
        layout = quadrants(self.basis.grid, [1.0, -0.5, 0.3, -2.0])
        frame, frame_basis = self.frame(layout)
        coefficients = overlap_coefficients(frame.state, frame_basis, layout)
        assert_relclose(float(np.sum(np.abs(coefficients) ** 2)), N0 * frame.detection.f ** 2, 1e-6)

    def test_difference_frame_is_an_eigenbasis(self):
        layout = half_x(self.basis.grid, [-1.0, 1.0])
        frame, frame_basis = self.frame(layout)
        mean = frame.state.mean
        self.assertAlmostEqual(abs(mean[frame.mean_slot]), math.sqrt(N0), places=6)
        np.testing.assert_allclose(np.delete(mean, frame.mean_slot), 0, atol=1e-6)
        self.assertAlmostEqual(abs(overlap(frame_basis[frame.mean_slot], self.basis[0])), 1.0, places=8)
        self.assertAlmostEqual(abs(overlap(frame_basis[frame.detection_slot], frame.detection.w1)), 1.0, places=8)


class MultiMeasurementTests(SimpleTestCase):
    def setUp(self):
        self.basis = hg_basis()
        self.v0 = self.basis[0]
        grid = self.basis.grid
        self.left_right = half_x(grid, [-1.0, 1.0])
        self.top_bottom = half_y(grid, [-1.0, 1.0])

    def test_two_splits_both_squeezed(self):
        plan = multi_measurement_plan(self.v0, [self.left_right, self.top_bottom], 1.0, self.basis, n0=N0)
        state, _, reports = plan
        self.assertEqual(plan.rank, 2)
        self.assertEqual(degree(state), 3)
        for report in reports:
            self.assertLessEqual(report.sql_ratio, E_MINUS_2 + 1e-6)

    def test_duplicate_layouts_are_dependent(self):
        plan = multi_measurement_plan(self.v0, [self.left_right, self.left_right], 1.0, self.basis)
        self.assertTrue(plan.dependent_layouts)
        self.assertEqual(plan.rank, 1)
        self.assertEqual(plan.dropped, (1,))

    def test_real_modes_recorded(self):
        plan = multi_measurement_plan(self.v0, [self.left_right], 1.0, self.basis)
        self.assertTrue(plan.real_modes)
        plan = multi_measurement_plan(self.v0.scaled(1j), [self.left_right], 1.0, self.basis)
        self.assertTrue(plan.real_modes)

        x, _ = self.basis.grid.mesh()
        tilted = SampledMode(self.basis.grid, self.v0.amplitude * np.exp(0.7j * x))
        plan = multi_measurement_plan(tilted, [self.left_right], 1.0, self.basis)
        self.assertFalse(plan.real_modes)
        self.assertEqual(plan.rank, 1)

    def test_rejects_empty_and_non_difference(self):
        with self.assertRaises(InvalidParameter):
            multi_measurement_plan(self.v0, [], 1.0, self.basis)
        with self.assertRaises(NotADifferenceMeasurement):
            multi_measurement_plan(self.v0, [half_x(self.basis.grid, [1.0, 1.0])], 1.0, self.basis)


class TwoZoneTests(SimpleTestCase):
    def test_displaced_beams(self):
        grid = small_grid()
        pool = hg_basis(grid=grid)
        layout = half_x(grid, [-1.0, 1.0])
        rng = np.random.default_rng(42)
        for shift in np.linspace(0.0, 1.0, 20):
            v0 = hermite_gauss_mode(0, 0, 1.0, grid, center=(float(shift), 0.0))
            split = two_zone_decomposition(v0, layout)
            self.assertAlmostEqual(split.alpha ** 2 + split.beta ** 2, 1.0, delta=1e-10)

            basis = two_zone_basis(split, pool)
            state = make_state(
                len(basis),
                coherent=[(0, math.sqrt(N0))],
                squeezers=[
                    SqueezerSpec(1, float(rng.uniform(0.1, 1.0)), float(rng.uniform(0, math.pi))),
                    SqueezerSpec(2, 0.5),
                ],
            )
            expected = variance_direct(state, basis, layout).variance
            assert_relclose(two_zone_variance_decomposition(state, split, basis), expected, 1e-8)

    def test_correlated_two_mode_subspace(self):
        grid = small_grid()
        pool = hg_basis(grid=grid)
        layout = half_x(grid, [-1.0, 1.0])
        v0 = hermite_gauss_mode(0, 0, 1.0, grid, center=(0.3, 0.0))
        split = two_zone_decomposition(v0, layout)
        basis = two_zone_basis(split, pool)
        dim = len(basis)
        squeezed = make_state(dim, squeezers=[SqueezerSpec(0, 0.8), SqueezerSpec(1, 0.2, 0.4)])
        fluctuations = basis_change(squeezed, beam_splitter(dim, 0, 1, theta=math.pi / 5))
        state = GaussianState(coherent_state(dim).mean, fluctuations.cov)
        self.assertGreater(abs(state.cov[0, 2]), 1e-2)

        expected = variance_direct(state, basis, layout).variance
        assert_relclose(two_zone_variance_decomposition(state, split, basis), expected, 1e-8)

    def test_balanced_split_eigenbasis(self):
        grid = small_grid()
        v0 = hermite_gauss_mode(0, 0, 1.0, grid)
        split = two_zone_decomposition(v0, half_x(grid, [-1.0, 1.0]))
        self.assertAlmostEqual(split.alpha, 0.0, places=12)
        self.assertAlmostEqual(split.beta, 1.0, places=12)
        np.testing.assert_allclose(split.w0.amplitude, v0.amplitude, atol=1e-14)
        np.testing.assert_allclose(split.w1.amplitude, split.v1.amplitude, atol=1e-14)

    def test_requires_plus_minus_gains(self):
        grid = small_grid()
        v0 = hermite_gauss_mode(0, 0, 1.0, grid)
        with self.assertRaises(InvalidLayout):
            two_zone_decomposition(v0, half_x(grid, [-2.0, 1.0]))
