import json
import os
import tempfile
import unittest
import numpy as np

from auto_comb.exceptions import AlignmentError, ConfigError, InsufficientDataError, ParameterError
from auto_comb.mask import (apply_mask, body_mask, dilate, dilation_radius, load_label_table, load_organ_masks,
                            merge, prepare_masks, remove_organs, subtract)
from auto_comb.volume import LabelMask, Volume3D, write_nifti
from backends import point_mask, random_mask


class TestMorphology(unittest.TestCase):
    def test_dilate_single_voxel(self):
        m = point_mask((7, 7, 7), (3, 3, 3))
        self.assertEqual(dilate(m, 1).count, 7)
        self.assertEqual(dilate(m, 2).count, 33)
        self.assertEqual(dilate(m, 1.5).count, 19)

    def test_dilate_identity_and_superset(self):
        m = random_mask((8, 8, 8), 0.05, seed=1)
        np.testing.assert_array_equal(dilate(m, 0).data, m.data)
        np.testing.assert_array_equal(dilate(m, 0.5).data, m.data)
        grown = dilate(m, 2)
        self.assertTrue(np.all(grown.data[m.data]))
        self.assertTrue(dilate(LabelMask(np.zeros((4, 4, 4), dtype=bool)), 3).is_empty())
        with self.assertRaises(ParameterError):
            dilate(m, -1)

    def test_merge(self):
        a = random_mask((6, 6, 6), 0.2, seed=2)
        b = random_mask((6, 6, 6), 0.2, seed=3)
        c = random_mask((6, 6, 6), 0.2, seed=4)
        empty = LabelMask.empty_like(a)
        np.testing.assert_array_equal(merge([a, empty]).data, a.data)
        np.testing.assert_array_equal(merge([a, a]).data, a.data)
        union = merge([a, b, c])
        expected = 0
        for idx in np.ndindex(a.dims):
            expected += int(a.data[idx] or b.data[idx] or c.data[idx])
        self.assertEqual(union.count, expected)
        with self.assertRaises(ParameterError):
            merge([])
        with self.assertRaises(AlignmentError):
            merge([a, LabelMask(np.zeros((6, 6, 5), dtype=bool))])

    def test_dilate_distributes_over_merge(self):
        a = random_mask((10, 10, 10), 0.04, seed=7)
        b = random_mask((10, 10, 10), 0.04, seed=8)
        for r in (1, 1.5, 2):
            np.testing.assert_array_equal(dilate(merge([a, b]), r).data, merge([dilate(a, r), dilate(b, r)]).data)

    def test_dilate_twice_covers_larger_radius(self):
        m = random_mask((12, 12, 12), 0.03, seed=9)
        for r1, r2 in ((1, 2), (2, 1), (1.5, 1), (2, 2)):
            twice = dilate(dilate(m, r1), r2).data
            once = dilate(m, max(r1, r2)).data
            self.assertFalse(np.any(once & ~twice), msg=str((r1, r2)))

    def test_subtract(self):
        a = random_mask((5, 5, 5), 0.5, seed=5)
        b = random_mask((5, 5, 5), 0.5, seed=6)
        out = subtract(a, b)
        np.testing.assert_array_equal(out.data, a.data & ~b.data)

    def test_apply_mask(self):
        vol = Volume3D(np.arange(64, dtype=np.float64).reshape((4, 4, 4)))
        full = LabelMask.full_like(vol)
        np.testing.assert_array_equal(apply_mask(vol, full).data, vol.data)
        self.assertTrue(np.isnan(apply_mask(vol, LabelMask.empty_like(vol)).data).all())
        i, j, k = np.indices(vol.dims)
        checker = vol.as_mask((i + j + k) % 2 == 0)
        out = apply_mask(vol, checker)
        self.assertEqual(int(np.isnan(out.data).sum()), 32)
        np.testing.assert_array_equal(out.data[checker.data], vol.data[checker.data])

    def test_remove_organs_hard(self):
        vol = Volume3D(np.full((12, 12, 12), 80.0))
        organ = np.zeros((12, 12, 12), dtype=bool)
        organ[4:8, 4:8, 4:8] = True
        organ = vol.as_mask(organ)
        out = remove_organs(vol, [organ], 0, 0.0, 0.0)
        self.assertTrue(np.all(out.data[organ.data] == 0.0))
        self.assertTrue(np.all(out.data[~organ.data] == 80.0))
        np.testing.assert_array_equal(remove_organs(vol, [], 4, 2.0, 0.0).data, vol.data)

    def test_remove_organs_blur_softens_edges(self):
        vol = Volume3D(np.full((20, 20, 20), 100.0))
        organ = np.zeros((20, 20, 20), dtype=bool)
        organ[7:13, 7:13, 7:13] = True
        organ = vol.as_mask(organ)
        hard = remove_organs(vol, [organ], 1, 0.0, -200.0)
        soft = remove_organs(vol, [organ], 1, 2.0, -200.0)
        hard_step = np.abs(np.diff(hard.data, axis=0)).max()
        soft_step = np.abs(np.diff(soft.data, axis=0)).max()
        self.assertLess(soft_step, hard_step)
        self.assertGreaterEqual(soft.data.min(), -200.0 - 1e-9)
        self.assertLessEqual(soft.data.max(), 100.0 + 1e-9)

    def test_remove_organs_between_value_and_fill(self):
        rng = np.random.default_rng(10)
        vol = Volume3D(rng.uniform(-300.0, 400.0, size=(14, 14, 14)), spacing=(0.8, 0.8, 1.5))
        organs = [vol.as_mask(random_mask((14, 14, 14), 0.02, seed=s).data) for s in (11, 12)]
        fill = -200.0
        for blur in (0.0, 1.0, 2.5):
            out = remove_organs(vol, organs, [1, 2], blur, fill).data
            self.assertTrue(np.all(out >= np.minimum(vol.data, fill) - 1e-9), msg=str(blur))
            self.assertTrue(np.all(out <= np.maximum(vol.data, fill) + 1e-9), msg=str(blur))

    def test_remove_organs_per_mask_radius(self):
        vol = Volume3D(np.ones((9, 9, 9)))
        a = point_mask((9, 9, 9), (2, 4, 4))
        b = point_mask((9, 9, 9), (6, 4, 4))
        out = remove_organs(vol, [a, b], [0, 1], 0.0, 0.0)
        self.assertEqual(int((out.data == 0.0).sum()), 1 + 7)
        with self.assertRaises(ParameterError):
            remove_organs(vol, [a, b], [0, 1, 2], 0.0, 0.0)


class TestOrgans(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out_dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_dilation_defaults(self):
        self.assertEqual(dilation_radius('small_bowel'), 2.0)
        self.assertEqual(dilation_radius('colon'), 2.0)
        self.assertEqual(dilation_radius('liver'), 4.0)
        self.assertEqual(dilation_radius('liver', {'liver': 6}), 6.0)

    def test_body_mask(self):
        data = np.full((20, 20, 20), -1000.0)
        i, j, k = np.indices(data.shape)
        sphere = (i - 9.5) ** 2 + (j - 9.5) ** 2 + (k - 9.5) ** 2 <= 49
        cavity = (i - 9.5) ** 2 + (j - 9.5) ** 2 + (k - 9.5) ** 2 <= 4
        data[sphere] = 20.0
        data[cavity] = -1000.0
        data[0:2, 0:2, 0:2] = 40.0
        body = body_mask(Volume3D(data))
        np.testing.assert_array_equal(body.data, sphere)

    def test_label_volume_and_table(self):
        labels = np.zeros((6, 6, 6))
        labels[1:3] = 1
        labels[4:6] = 2
        ref = Volume3D(np.zeros((6, 6, 6)))
        masks = load_organ_masks({'small_bowel': 1, 'liver': 2}, ref, label_volume=ref.with_data(labels))
        self.assertEqual(masks['small_bowel'].count, 72)
        self.assertEqual(masks['liver'].count, 72)
        with self.assertRaises(ConfigError):
            load_organ_masks({'liver': 2}, ref)

        table = os.path.join(self.out_dir, 'labels.json')
        with open(table, 'w') as f:
            json.dump({'small_bowel': 1, 'liver': 2}, f)
        self.assertEqual(load_label_table(table), {'small_bowel': 1, 'liver': 2})
        with open(table, 'w') as f:
            json.dump({'liver': 'two'}, f)
        with self.assertRaises(ConfigError):
            load_label_table(table)

    def test_mask_files_must_align(self):
        ref = Volume3D(np.zeros((6, 6, 6)))
        path = write_nifti(LabelMask(np.ones((6, 6, 6), dtype=bool), spacing=(2.0, 1.0, 1.0)),
                           os.path.join(self.out_dir, 'liver.nii.gz'), np.uint8)
        with self.assertRaises(AlignmentError):
            load_organ_masks({'liver': path}, ref)

    def _scene(self):
        dims = (24, 24, 24)
        ct = np.full(dims, -1000.0)
        ct[2:22, 2:22, 2:22] = 0.0
        ct = Volume3D(ct)
        bowel = np.zeros(dims, dtype=bool)
        bowel[6:12, 6:18, 6:18] = True
        liver = np.zeros(dims, dtype=bool)
        liver[14:18, 6:18, 6:18] = True
        return ct, {'small_bowel': ct.as_mask(bowel), 'liver': ct.as_mask(liver)}

    def test_prepare_masks(self):
        ct, organs = self._scene()
        prep = prepare_masks(ct, organs, ['small_bowel'])
        removal = dilate(organs['liver'], 4)
        np.testing.assert_array_equal(prep.removal.data, removal.data)
        np.testing.assert_array_equal(prep.intestine.data, dilate(organs['small_bowel'], 2).data & ~removal.data)
        self.assertFalse(np.any(prep.intestine.data & prep.removal.data))
        self.assertFalse(np.any(prep.analysis.data & prep.removal.data))
        self.assertTrue(np.all(prep.exclusion.data[ct.data < -500]))
        np.testing.assert_array_equal(prep.exclusion.data, ~prep.analysis.data)

    def test_prepare_masks_errors(self):
        ct, organs = self._scene()
        with self.assertRaises(ConfigError):
            prepare_masks(ct, organs, ['colon'])
        organs['liver'] = organs['small_bowel']
        with self.assertRaises(InsufficientDataError):
            prepare_masks(ct, organs, ['small_bowel'])
