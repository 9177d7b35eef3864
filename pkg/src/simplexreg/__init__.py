"""Log-ratio and Dirichlet regression for compositional data.

The top-level namespace re-exports the library API. Plotting and the
command-line driver live in :mod:`simplexreg.plots`,
:mod:`simplexreg.pipeline` and :mod:`simplexreg.cli`.
"""

from simplexreg.composition import *  # noqa: F401,F403
from simplexreg.dirichlet import *  # noqa: F401,F403
from simplexreg.errors import *  # noqa: F401,F403
from simplexreg.geometry import *  # noqa: F401,F403
from simplexreg.io import *  # noqa: F401,F403
from simplexreg.regression import *  # noqa: F401,F403
from simplexreg.resampling import *  # noqa: F401,F403
from simplexreg.transforms import *  # noqa: F401,F403

__version__ = "0.1.0"
