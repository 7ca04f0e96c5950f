from .hessian import *
from .eigen import *
from .jerman import *
