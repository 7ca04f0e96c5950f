from .iterative import *
