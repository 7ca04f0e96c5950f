from .theme import *
