import unittest
import numpy as np
import torch

from auto_comb.exceptions import ParameterError, PreconditionError
from auto_comb.volume import LabelMask, Volume3D
from auto_comb.vesselness import (EigenTriple, eig3_symmetric, hessian_at_scale, jerman_field, jerman_response,
                                  regularized_lambda, vesselness_multiscale)
from backends import cylinder_volume, quadratic_volume

INTERIOR = (slice(10, 22),) * 3


def _jerman_oracle(l2, lr):
    return l2 ** 2 * (lr - l2) * (3.0 / (l2 + lr)) ** 3


class TestHessian(unittest.TestCase):
    def test_quadratic(self):
        for scale in (1.0, 1.5):
            h = hessian_at_scale(quadratic_volume(fn=lambda x, y, z: x * x), scale)
            xx = h.xx.numpy()[INTERIOR]
            np.testing.assert_allclose(xx, 2.0 * scale ** 2, rtol=0.05)
            for name in ('yy', 'zz', 'xy', 'xz', 'yz'):
                self.assertLess(np.abs(getattr(h, name).numpy()[INTERIOR]).max(), 0.05 * 2.0 * scale ** 2)

    def test_anisotropic_spacing(self):
        vol = quadratic_volume(dims=(40, 24, 24), spacing=(0.5, 1.0, 1.0), fn=lambda x, y, z: x * x)
        h = hessian_at_scale(vol, 1.0)
        np.testing.assert_allclose(h.xx.numpy()[12:28, 8:16, 8:16], 2.0, rtol=0.05)

    def test_mixed_derivative(self):
        h = hessian_at_scale(quadratic_volume(fn=lambda x, y, z: x * y), 1.0)
        np.testing.assert_allclose(h.xy.numpy()[INTERIOR], 1.0, rtol=0.05)
        self.assertLess(np.abs(h.xx.numpy()[INTERIOR]).max(), 1e-6)

    def test_constant(self):
        h = hessian_at_scale(Volume3D(np.full((16, 16, 16), 123.0)), 2.0)
        for comp in h.components():
            self.assertLess(float(comp.abs().max()), 1e-9)
        self.assertEqual(h.volume('xx').dims, (16, 16, 16))
        with self.assertRaises(ParameterError):
            hessian_at_scale(Volume3D(np.zeros((4, 4, 4))), 0.0)


class TestJerman(unittest.TestCase):
    def test_branches(self):
        self.assertEqual(jerman_response(-0.3, 1.0), 0.0)
        self.assertEqual(jerman_response(0.0, 1.0), 0.0)
        self.assertEqual(jerman_response(0.4, 0.0), 0.0)
        self.assertEqual(jerman_response(0.5, 1.0), 1.0)
        self.assertEqual(jerman_response(2.0, 1.0), 1.0)

    def test_cubic_branch(self):
        self.assertAlmostEqual(jerman_response(0.25, 1.0), 0.648, places=12)
        for l2, lr in ((0.1, 1.0), (0.3, 0.9), (1.0, 3.0)):
            self.assertAlmostEqual(jerman_response(l2, lr), _jerman_oracle(l2, lr), places=12)

    def test_accepts_eigen_triple(self):
        bright = eig3_symmetric([0.0, -0.25, -1.0, 0.0, 0.0, 0.0])
        self.assertAlmostEqual(jerman_response(bright, 1.0), 0.648, places=9)
        self.assertEqual(jerman_response(EigenTriple(0.0, 0.25, 1.0), 1.0), 0.0)
        self.assertEqual(jerman_response(EigenTriple(0.0, -0.6, -1.0), 1.0), 1.0)

    def test_continuous_at_half(self):
        for lr in (0.2, 1.0, 7.5):
            below = jerman_response(lr / 2.0 * (1.0 - 1e-9), lr)
            self.assertAlmostEqual(below, 1.0, delta=1e-6)

    def test_field_matches_scalar(self):
        rng = np.random.default_rng(0)
        l2 = rng.uniform(-1.0, 2.0, size=500)
        lr = rng.uniform(0.0, 2.0, size=500)
        field = jerman_field(torch.from_numpy(l2), torch.from_numpy(lr)).numpy()
        expected = np.array([jerman_response(a, b) for a, b in zip(l2, lr)])
        np.testing.assert_allclose(field, expected, atol=1e-12)
        self.assertTrue(np.all((field >= 0.0) & (field <= 1.0)))

    def test_regularized_lambda(self):
        l3 = torch.tensor([-1.0, 0.0, 0.2, 0.8], dtype=torch.float64)
        np.testing.assert_array_equal(regularized_lambda(l3, 0.5).numpy(), [0.0, 0.0, 0.5, 0.8])
        np.testing.assert_array_equal(regularized_lambda(l3, 0.0).numpy(), [0.0, 0.0, 0.2, 0.8])


class TestVesselness(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        dims = (65, 65, 65)
        cls.straight, cls.straight_dist = cylinder_volume(dims, radius_vox=2.0, inside=300.0, background=100.0)
        cls.rotated, cls.rotated_dist = cylinder_volume(dims, radius_vox=2.0, inside=300.0, background=100.0,
                                                        direction=(1.0, 1.0, 0.0))
        cls.straight_map = vesselness_multiscale(cls.straight)
        cls.rotated_map = vesselness_multiscale(cls.rotated)

    def test_straight_cylinder(self):
        x, y, z = np.indices(self.straight.dims)
        centerline = (self.straight_dist < 1e-9) & (x >= 8) & (x <= 56)
        background = self.straight_dist > 8.0
        self.assertGreaterEqual(np.median(self.straight_map.data[centerline]), 0.8)
        self.assertLessEqual(np.median(self.straight_map.data[background]), 0.05)

    def test_rotated_cylinder(self):
        x, y, z = np.indices(self.rotated.dims)
        centerline = (self.rotated_dist < 1e-9) & (np.abs(x - 32) <= 20)
        self.assertGreater(int(centerline.sum()), 30)
        straight_line = (self.straight_dist < 1e-9) & (x >= 8) & (x <= 56)
        a = np.median(self.straight_map.data[straight_line])
        b = np.median(self.rotated_map.data[centerline])
        self.assertLessEqual(abs(a - b), 0.1)

    def test_range(self):
        for vmap in (self.straight_map, self.rotated_map):
            self.assertGreaterEqual(vmap.data.min(), 0.0)
            self.assertLessEqual(vmap.data.max(), 1.0)

    def test_uniform_volume(self):
        out = vesselness_multiscale(Volume3D(np.full((20, 20, 20), 250.0)))
        self.assertEqual(float(np.abs(out.data).max()), 0.0)

    def test_intensity_offset(self):
        vol, _ = cylinder_volume((33, 33, 33), radius_vox=2.0, inside=300.0, background=100.0)
        a = vesselness_multiscale(vol, scales_mm=(1.0, 2.0)).data
        b = vesselness_multiscale(vol.with_data(vol.data + 50.0), scales_mm=(1.0, 2.0)).data
        np.testing.assert_allclose(a, b, rtol=0.0, atol=1e-6)

    def test_more_scales_never_lower(self):
        vol, _ = cylinder_volume((33, 33, 33), radius_vox=1.5, inside=250.0, background=50.0,
                                 direction=(1.0, 2.0, 0.5))
        one = vesselness_multiscale(vol, scales_mm=(1.0,), dump_scales=False).data
        both, per_scale = vesselness_multiscale(vol, scales_mm=(1.0, 2.5), dump_scales=True)
        self.assertEqual(len(per_scale), 2)
        self.assertTrue(np.all(both.data >= one))
        np.testing.assert_array_equal(np.maximum(per_scale[0].data, per_scale[1].data), both.data)

    def test_full_analysis_mask_matches_none(self):
        vol, _ = cylinder_volume((25, 25, 25))
        full = LabelMask.full_like(vol)
        a = vesselness_multiscale(vol, scales_mm=(1.5,)).data
        b = vesselness_multiscale(vol, scales_mm=(1.5,), analysis_mask=full).data
        np.testing.assert_array_equal(a, b)

    def test_preconditions(self):
        vol = Volume3D(np.full((8, 8, 8), 10.0))
        with self.assertRaises(PreconditionError):
            vesselness_multiscale(vol.with_data(vol.data - 20.0))
        nan = vol.data.copy()
        nan[0, 0, 0] = np.nan
        with self.assertRaises(PreconditionError):
            vesselness_multiscale(vol.with_data(nan))
        with self.assertRaises(ParameterError):
            vesselness_multiscale(vol, scales_mm=())
        with self.assertRaises(ParameterError):
            vesselness_multiscale(vol, tau_cut=0.0)
