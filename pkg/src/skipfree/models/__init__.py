# Must import crucial base class first!
from .singleton import Singleton

from .tree import *
from .mdp import *
from .reports import *
from .model_format import *
from .settings import *
