from .proximity import *
from .scoring import *
