import json
import math
import os
import tempfile
import unittest
import numpy as np

from auto_comb.exceptions import AlignmentError, EmptyPopulationError, ParameterError
from auto_comb.fusion import (FusionParams, auto_roi, comb_map, proximity_map, proximity_raw, region_score,
                              score_regions)
from auto_comb.volume import LabelMask, ProbabilityMap, Volume3D
from backends import point_mask, random_mask, random_probability


class TestProximity(unittest.TestCase):
    def test_single_voxel(self):
        wall = point_mask((21, 21, 21), (10, 10, 10))
        prox = proximity_map(wall, 2.0).data
        self.assertEqual(prox[10, 10, 10], 1.0)
        self.assertEqual(prox.max(), 1.0)
        profile = prox[10:18, 10, 10]
        self.assertTrue(np.all(np.diff(profile) < 0))
        for d in range(0, 7):
            expected = math.exp(-d * d / (2.0 * 2.0 ** 2))
            self.assertAlmostEqual(prox[10 + d, 10, 10] / prox[10, 10, 10], expected, delta=0.01 * expected)

    def test_anisotropic_decay(self):
        wall = point_mask((21, 21, 21), (10, 10, 10), spacing=(1.0, 1.0, 2.0))
        prox = proximity_map(wall, 2.0).data
        self.assertAlmostEqual(prox[10, 10, 11], math.exp(-4.0 / 8.0), delta=0.01)
        self.assertAlmostEqual(prox[12, 10, 10], math.exp(-4.0 / 8.0), delta=0.01)

    def test_thick_wall_outweighs_thin(self):
        data = np.zeros((64, 8, 8), dtype=bool)
        data[12, :, :] = True
        data[45:48, :, :] = True
        wall = LabelMask(data)
        raw = proximity_raw(wall, 2.0).data
        self.assertGreater(raw[46, 4, 4], raw[12, 4, 4])
        prox = proximity_map(wall, 2.0).data
        self.assertLess(prox[12, 4, 4], 1.0)
        self.assertAlmostEqual(prox[46, 4, 4], 1.0, delta=1e-12)

    def test_monotone_under_wall_growth(self):
        for seed in range(5):
            small = random_mask((10, 10, 10), 0.05, seed=seed)
            large = small.with_data(small.data | random_mask((10, 10, 10), 0.05, seed=100 + seed).data)
            a = proximity_raw(small, 1.5).data
            b = proximity_raw(large, 1.5).data
            self.assertTrue(np.all(a <= b + 1e-12))

    def test_errors(self):
        with self.assertRaises(EmptyPopulationError):
            proximity_map(LabelMask(np.zeros((4, 4, 4), dtype=bool)), 2.0)
        with self.assertRaises(ParameterError):
            proximity_map(point_mask((4, 4, 4), (1, 1, 1)), 0.0)


class TestCombMap(unittest.TestCase):
    def test_identities(self):
        vessel = random_probability((6, 6, 6), seed=1)
        ones = ProbabilityMap(np.ones((6, 6, 6)))
        np.testing.assert_array_equal(comb_map(vessel, ones).data, vessel.data)
        self.assertEqual(comb_map(ProbabilityMap(np.zeros((6, 6, 6))), ones).data.max(), 0.0)
        with self.assertRaises(AlignmentError):
            comb_map(vessel, ProbabilityMap(np.ones((6, 6, 5))))

    def test_product_bounded(self):
        for seed in range(20):
            vessel = random_probability((5, 6, 7), density=0.7, seed=seed)
            prox = random_probability((5, 6, 7), density=0.9, seed=50 + seed)
            comb = comb_map(vessel, prox).data
            self.assertTrue(np.all(comb <= np.minimum(vessel.data, prox.data)))
            for idx in np.ndindex(comb.shape):
                self.assertEqual(comb[idx], vessel.data[idx] * prox.data[idx])


class TestAutoRoi(unittest.TestCase):
    def test_single_voxel_face_neighbours(self):
        wall = point_mask((5, 5, 5), (2, 2, 2))
        roi = auto_roi(wall, 1.0)
        self.assertEqual(roi.count, 6)
        self.assertFalse(roi.data[2, 2, 2])

    def test_small_distance_is_face_shell(self):
        data = np.zeros((10, 10, 10), dtype=bool)
        data[3:7, 3:7, 3:7] = True
        wall = LabelMask(data)
        roi = auto_roi(wall, 0.5)
        self.assertEqual(roi.count, 6 * 16)

    def test_full_wall(self):
        self.assertTrue(auto_roi(LabelMask(np.ones((4, 4, 4), dtype=bool)), 15.0).is_empty())
        with self.assertRaises(EmptyPopulationError):
            auto_roi(LabelMask(np.zeros((4, 4, 4), dtype=bool)), 15.0)

    def test_physical_distance(self):
        wall = point_mask((9, 9, 9), (4, 4, 4), spacing=(1.0, 1.0, 3.0))
        roi = auto_roi(wall, 2.0).data
        self.assertTrue(roi[6, 4, 4])
        self.assertTrue(roi[4, 4, 5])
        self.assertFalse(roi[4, 4, 6])
        self.assertFalse(roi[7, 4, 4])


class TestScoring(unittest.TestCase):
    def test_constant_and_half(self):
        roi = LabelMask(np.ones((4, 4, 4), dtype=bool))
        report = region_score(ProbabilityMap(np.full((4, 4, 4), 0.3)), roi, 0.05)
        self.assertAlmostEqual(report.score, 0.3, delta=1e-12)
        self.assertTrue(report.verdict)
        half = np.zeros((4, 4, 4))
        half[:2] = 1.0
        report = region_score(ProbabilityMap(half), roi, 0.6)
        self.assertEqual(report.score, 0.5)
        self.assertFalse(report.verdict)
        self.assertEqual(report.regions[0].voxels, 64)
        self.assertEqual(report.regions[0].max, 1.0)

    def test_accumulation_oracle(self):
        comb = random_probability((9, 9, 9), density=0.6, seed=3)
        roi = random_mask((9, 9, 9), 0.4, seed=4)
        total, count = 0.0, 0
        for idx in np.ndindex(comb.dims):
            if roi.data[idx]:
                total += comb.data[idx]
                count += 1
        self.assertAlmostEqual(region_score(comb, roi, 0.05).score, total / count, delta=1e-9)

    def test_empty_roi(self):
        with self.assertRaises(EmptyPopulationError):
            region_score(ProbabilityMap(np.zeros((3, 3, 3))), LabelMask(np.zeros((3, 3, 3), dtype=bool)), 0.05)

    def test_label_regions_and_enclosure(self):
        dims = (10, 10, 10)
        labels = np.zeros(dims)
        labels[0:5] = 1
        labels[9, 9, 5:] = 2
        comb = np.zeros(dims)
        comb[0:5] = 0.01
        comb[9, 9, 5:] = 0.2
        prox = np.full(dims, 0.125)
        prox[9, 9, 5:] = 1.0
        params = FusionParams(theta=0.05)
        report = score_regions(ProbabilityMap(comb), Volume3D(labels), params, ProbabilityMap(prox), roi_source='user')
        self.assertEqual([r.id for r in report.regions], [1, 2])
        r1, r2 = report.regions
        self.assertFalse(r1.verdict)
        self.assertTrue(r2.verdict)
        self.assertTrue(report.verdict)
        self.assertAlmostEqual(report.score, 0.2, delta=1e-12)
        self.assertFalse(r1.possible_enclosure_artifact)
        self.assertTrue(r2.possible_enclosure_artifact)

        with tempfile.TemporaryDirectory() as out_dir:
            path = report.write_json(os.path.join(out_dir, 'report.json'))
            with open(path) as f:
                written = json.load(f)
        self.assertEqual(written['schema_version'], '1.0')
        self.assertEqual(written['roi_source'], 'user')
        self.assertTrue(written['verdict'])
        self.assertEqual(len(written['regions']), 2)
        self.assertEqual(written['regions'][1]['voxels'], 5)

    def test_score_ignores_voxel_order(self):
        comb = random_probability((8, 8, 8), 0.6, seed=21)
        roi = random_mask((8, 8, 8), 0.3, seed=22)
        order = np.random.default_rng(23).permutation(comb.data.size)
        comb_p = comb.with_data(comb.data.ravel()[order].reshape(comb.dims))
        roi_p = roi.with_data(roi.data.ravel()[order].reshape(roi.dims))
        self.assertEqual(region_score(comb_p, roi_p, 0.05).score, region_score(comb, roi, 0.05).score)

    def test_score_scales_with_comb(self):
        comb = random_probability((8, 8, 8), 0.6, seed=24)
        roi = random_mask((8, 8, 8), 0.3, seed=25)
        base = region_score(comb, roi, 0.05).score
        for c in (0.5, 0.25, 0.125):
            self.assertEqual(region_score(comb.with_data(comb.data * c), roi, 0.05).score, base * c)
        self.assertAlmostEqual(region_score(comb.with_data(comb.data * 0.3), roi, 0.05).score, base * 0.3,
                               delta=1e-15)

    def test_params(self):
        with self.assertRaises(ParameterError):
            FusionParams(theta=1.5)
        with self.assertRaises(ParameterError):
            FusionParams(sigma_wall_mm=0.0)
