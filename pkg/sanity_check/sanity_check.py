import unittest
import sys
import os
currentdir = os.path.dirname(os.path.realpath(__file__))
parentdir = os.path.dirname(currentdir)
sys.path.append(parentdir)
sys.path.append(currentdir)

"""
Volume and mask test cases
"""
from test_volume import TestVolumeGeometry, TestNifti, TestVolumeOps
from test_mask import TestMorphology, TestOrgans

"""
Wall segmentation test cases
"""
from test_gmm import TestHistogram, TestFitGmm, TestBic, TestWallThreshold

"""
Vesselness and enhancement test cases
"""
from test_eigen import TestEigen
from test_vesselness import TestHessian, TestJerman, TestVesselness
from test_enhance import TestLocalMax, TestGeometricUpdate, TestThresholdStep, TestEnhance

"""
Fusion and pipeline test cases
"""
from test_fusion import TestProximity, TestCombMap, TestAutoRoi, TestScoring
from test_pipeline import TestConfig, TestPhantom, TestStages
# Seeds 1-5 only run with AUTOCOMB_SLOW_TESTS=1
from test_pipeline import TestDiscrimination


if __name__ == '__main__':
    unittest.main()
