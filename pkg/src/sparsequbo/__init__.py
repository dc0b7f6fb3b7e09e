"""Binary sparse coding as QUBO, with classical and spiking samplers."""

from .dictlearn import *  # noqa: F401,F403
from .imaging import *  # noqa: F401,F403
from .qubo import *  # noqa: F401,F403
from .samplers import *  # noqa: F401,F403
from .suites import *  # noqa: F401,F403

__version__ = "0.1.0"
