"""Nonlinear non-Hermitian topological interface lattices."""
from .lattice import *  # noqa: F401,F403
from .nonlinear_modes import *  # noqa: F401,F403
from .localizer import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403

__version__ = "0.1.0"
