from .volume import *
from .nifti import *
from .ops import *
