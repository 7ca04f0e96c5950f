from .histogram import *
from .gmm import *
from .bic import *
from .threshold import *
