from .morphology import *
from .organs import *
