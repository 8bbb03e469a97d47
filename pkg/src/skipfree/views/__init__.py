from .view import *  # base class has to be first
from .model_views import *
from .solve_views import *
