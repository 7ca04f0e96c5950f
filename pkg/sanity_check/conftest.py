import os
import sys

currentdir = os.path.dirname(os.path.realpath(__file__))
sys.path.insert(0, os.path.dirname(currentdir))
sys.path.insert(0, currentdir)
