"""Python bindings for the fee-redistribution mechanism laboratory.

Everything lives in the compiled extension; this package just re-exports it.
"""

from ._core import *  # noqa: F401,F403
from ._core import __all__, __version__  # noqa: F401
